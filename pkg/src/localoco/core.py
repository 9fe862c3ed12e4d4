"""Domain types: points, positive-definite quadratics, per-round data, constants.

Points are plain 1-D float ``numpy`` arrays; :func:`as_point` is the single
entry point that validates them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from localoco.errors import StructuralError, UsageError

SYMMETRY_RTOL = 1e-12


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Return ``x`` as a finite 1-D float array, optionally checking its length."""
    p = np.atleast_1d(np.array(x, dtype=float))
    if p.ndim != 1 or p.size < 1:
        raise StructuralError(f"point must be a nonempty vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise StructuralError("point has non-finite coordinates")
    if dim is not None and p.size != dim:
        raise StructuralError(f"dimension mismatch: expected {dim}, got {p.size}")
    return p


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QuadraticFunction:
    """h(x) = 0.5 (x - center)^T H (x - center) + offset with H positive definite."""

    hessian: np.ndarray
    center: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        H = np.array(self.hessian, dtype=float)
        if H.ndim == 0:
            H = H.reshape(1, 1)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise StructuralError(f"hessian must be square, got shape {H.shape}")
        c = as_point(self.center, H.shape[0])
        if not np.all(np.isfinite(H)):
            raise StructuralError("hessian has non-finite entries")
        scale = max(np.max(np.abs(H)), 1.0)
        if np.max(np.abs(H - H.T)) > SYMMETRY_RTOL * scale:
            raise UsageError("hessian is not symmetric")
        H = 0.5 * (H + H.T)
        if not np.isfinite(self.offset):
            raise StructuralError("offset must be finite")
        object.__setattr__(self, "hessian", _frozen(H))
        object.__setattr__(self, "center", _frozen(c))
        object.__setattr__(self, "offset", float(self.offset))
        if self.eigenvalues[0] <= 0.0:
            raise UsageError(f"hessian is not positive definite (min eigenvalue {self.eigenvalues[0]:g})")

    @property
    def dim(self) -> int:
        return self.center.size

    @cached_property
    def _eigh(self):
        w, Q = np.linalg.eigh(self.hessian)
        return _frozen(w), _frozen(Q)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues of the Hessian."""
        return self._eigh[0]

    @property
    def eigenvectors(self) -> np.ndarray:
        return self._eigh[1]

    @property
    def strong_convexity(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def smoothness(self) -> float:
        return float(self.eigenvalues[-1])

    def __call__(self, x) -> float:
        return evaluate(self, x)

    def grad(self, x) -> np.ndarray:
        return gradient(self, x)

    def to_dict(self) -> dict:
        return {"H": self.hessian.tolist(), "center": self.center.tolist(), "offset": self.offset}

    @classmethod
    def from_dict(cls, d: dict) -> "QuadraticFunction":
        return cls(np.asarray(d["H"], dtype=float), np.asarray(d["center"], dtype=float), float(d.get("offset", 0.0)))


def evaluate(h: QuadraticFunction, x) -> float:
    """Value of ``h`` at ``x``."""
    d = as_point(x, h.dim) - h.center
    return float(0.5 * d @ h.hessian @ d + h.offset)


def gradient(h: QuadraticFunction, x) -> np.ndarray:
    """Gradient ``H (x - center)``."""
    return h.hessian @ (as_point(x, h.dim) - h.center)


@dataclass(frozen=True, eq=False)
class AmbientSet:
    """The compact convex set every action lives in; here a closed Euclidean ball."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(as_point(self.center)))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise UsageError("ambient radius must be positive and finite")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, x, tol: float = 1e-12) -> bool:
        return float(np.linalg.norm(as_point(x, self.dim) - self.center)) <= self.radius + tol

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "radius": self.radius}

    @classmethod
    def from_dict(cls, d: dict) -> "AmbientSet":
        return cls(np.asarray(d["center"], dtype=float), float(d["radius"]))


@dataclass(frozen=True)
class ConstantsBundle:
    """Problem constants the algorithm and its guarantees are stated in.

    ``lip_f``/``lip_g`` are function Lipschitz moduli over the ambient set,
    distinct from the gradient Lipschitz moduli ``L_f``/``L_g``.
    """

    nu_f: float
    nu_g: float
    L_f: float
    L_g: float
    lip_f: float
    lip_g: float
    G: float
    D: float
    dist: float
    alpha: float = 0.5

    def __post_init__(self):
        vals = {k: getattr(self, k) for k in self.__dataclass_fields__}
        bad = [k for k, v in vals.items() if not np.isfinite(v)]
        if bad:
            raise UsageError(f"non-finite constants: {bad}")
        for k in ("nu_f", "nu_g", "L_f", "L_g", "lip_f", "lip_g", "G", "D", "dist"):
            if vals[k] <= 0:
                raise UsageError(f"{k} must be positive, got {vals[k]}")
        if self.nu_f > self.L_f:
            raise UsageError(f"nu_f={self.nu_f} exceeds L_f={self.L_f}")
        if self.nu_g > self.L_g:
            raise UsageError(f"nu_g={self.nu_g} exceeds L_g={self.L_g}")
        if not 0 < self.alpha <= 1:
            raise UsageError(f"alpha must lie in (0, 1], got {self.alpha}")

    def replace(self, **changes) -> "ConstantsBundle":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(changes)
        return ConstantsBundle(**d)


@dataclass(frozen=True, eq=False)
class RoundPair:
    """Loss ``f`` and constraint ``g`` for one slot; the feasible set is {g <= 0}."""

    f: QuadraticFunction
    g: QuadraticFunction

    def __post_init__(self):
        if self.f.dim != self.g.dim:
            raise StructuralError("f and g have different dimensions")
        if not self.g.offset < 0:
            raise UsageError("constraint must have a strictly feasible point (g offset < 0)")

    @property
    def dim(self) -> int:
        return self.f.dim

    def to_dict(self) -> dict:
        return {"f": self.f.to_dict(), "g": self.g.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "RoundPair":
        return cls(QuadraticFunction.from_dict(d["f"]), QuadraticFunction.from_dict(d["g"]))


def sup_gradient_norm(h: QuadraticFunction, ambient: AmbientSet) -> float:
    """Upper bound on sup of ||grad h|| over the ambient ball (tight when H is isotropic)."""
    return h.smoothness * (ambient.radius + float(np.linalg.norm(ambient.center - h.center)))


def derive_constants(
    seq: Sequence[RoundPair], ambient: AmbientSet, dist: float, alpha: float = 0.5
) -> ConstantsBundle:
    """Sequence-wide constants computed from Hessian spectra and the ambient ball."""
    if len(seq) == 0:
        raise UsageError("cannot derive constants from an empty sequence")
    for r in seq:
        if r.dim != ambient.dim:
            raise StructuralError("round dimension differs from ambient dimension")
    lip_f = max(sup_gradient_norm(r.f, ambient) for r in seq)
    lip_g = max(sup_gradient_norm(r.g, ambient) for r in seq)
    return ConstantsBundle(
        nu_f=min(r.f.strong_convexity for r in seq),
        nu_g=min(r.g.strong_convexity for r in seq),
        L_f=max(r.f.smoothness for r in seq),
        L_g=max(r.g.smoothness for r in seq),
        lip_f=lip_f,
        lip_g=lip_g,
        G=max(lip_f, lip_g),
        D=ambient.diameter,
        dist=dist,
        alpha=alpha,
    )


@dataclass(frozen=True, eq=False)
class ProblemSequence:
    """A full problem instance: rounds, ambient set and the algorithm's window radius."""

    rounds: tuple
    ambient: AmbientSet
    dist: float
    alpha: float = 0.5
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(self.rounds))
        if not self.rounds:
            raise UsageError("problem sequence has no rounds")
        for r in self.rounds:
            if r.dim != self.ambient.dim:
                raise StructuralError("round dimension differs from ambient dimension")

    @property
    def dim(self) -> int:
        return self.ambient.dim

    @property
    def horizon(self) -> int:
        return len(self.rounds)

    def constants(self) -> ConstantsBundle:
        return derive_constants(self.rounds, self.ambient, self.dist, self.alpha)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "rounds": [r.to_dict() for r in self.rounds],
            "ambient": self.ambient.to_dict(),
            "dist": self.dist,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSequence":
        seq = cls(
            rounds=[RoundPair.from_dict(r) for r in d["rounds"]],
            ambient=AmbientSet.from_dict(d["ambient"]),
            dist=float(d["dist"]),
            alpha=float(d.get("alpha", 0.5)),
        )
        if "dim" in d and int(d["dim"]) != seq.dim:
            raise StructuralError(f"declared dim {d['dim']} does not match data dim {seq.dim}")
        return seq

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ProblemSequence":
        return cls.from_dict(json.loads(text))
