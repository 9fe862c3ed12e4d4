"""One damped projected-gradient step: the update every feasible-case round uses."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Any

import numpy as np

from localoco.core import as_point
from localoco.errors import UsageError

MEMBERSHIP_TOL = 1e-9


class StepSizeWarning(UserWarning):
    """mu is below the smoothness modulus, so the contraction guarantee is void."""


@dataclass(frozen=True, eq=False)
class OptimizeRequest:
    """Inputs of one step.

    ``h`` is either an object with a ``grad`` method (e.g. a QuadraticFunction)
    or a plain callable returning the gradient. ``smoothness`` is only used to
    warn when ``mu`` is too small; pass ``None`` to skip the check.
    """

    h: Any
    region: Any
    mu: float
    start: np.ndarray
    alpha: float = 0.5
    smoothness: float | None = None
    strict: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise UsageError(f"mu must be positive, got {self.mu}")
        if not 0 < self.alpha <= 1:
            raise UsageError(f"alpha must lie in (0, 1], got {self.alpha}")
        object.__setattr__(self, "start", as_point(self.start, self.region.dim))


def _grad(h, x):
    g = getattr(h, "grad", None)
    return np.asarray(g(x) if g is not None else h(x), dtype=float)


def projected_point(req: OptimizeRequest) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(x_t, x_hat)``: the (possibly re-projected) start and the projected gradient point."""
    smooth = req.smoothness
    if smooth is None and hasattr(req.h, "smoothness"):
        smooth = req.h.smoothness
    if smooth is not None and req.mu < smooth * (1 - 1e-12):
        warnings.warn(f"mu={req.mu:g} < smoothness {smooth:g}; contraction not guaranteed", StepSizeWarning)
    x = req.start
    if not req.region.contains(x, MEMBERSHIP_TOL):
        if req.strict:
            raise UsageError("start point lies outside the region")
        x = req.region.project(x)
    x_hat = req.region.project(x - _grad(req.h, x) / req.mu)
    return x, x_hat


def optimize_step(req: OptimizeRequest) -> np.ndarray:
    """x_next = x + alpha * (Proj(x - grad h(x) / mu, region) - x)."""
    x, x_hat = projected_point(req)
    return x + req.alpha * (x_hat - x)


def contraction_factor(nu: float, mu: float, alpha: float) -> float:
    """Guaranteed per-step distance ratio sqrt(1 - alpha * nu / mu) for mu >= L."""
    return float(np.sqrt(max(0.0, 1.0 - alpha * nu / mu)))
