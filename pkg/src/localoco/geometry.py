"""Euclidean projections onto balls, quadratic sublevel sets and their intersections."""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np
from scipy.optimize import brentq

from localoco.core import QuadraticFunction, as_point, evaluate
from localoco.errors import InfeasibleSetError, NumericalError, StructuralError, UsageError

DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_ITER = 10_000
EPS_FEAS = 1e-12


@dataclass(frozen=True, eq=False)
class BallSet:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise UsageError(f"ball radius must be positive and finite, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.size

    def contains(self, x, tol: float = 1e-12) -> bool:
        return float(np.linalg.norm(np.asarray(x) - self.center)) <= self.radius + tol

    def project(self, y) -> np.ndarray:
        return project_ball(y, self)


@dataclass(frozen=True, eq=False)
class SublevelSet:
    """The set {x : g(x) <= 0}."""

    g: QuadraticFunction

    @property
    def dim(self) -> int:
        return self.g.dim

    @property
    def is_empty(self) -> bool:
        return self.g.offset > 0

    def contains(self, x, tol: float = 1e-12) -> bool:
        return evaluate(self.g, x) <= tol

    def project(self, y) -> np.ndarray:
        return project_sublevel(y, self)


@dataclass(frozen=True, eq=False)
class IntersectionSet:
    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise UsageError("intersection needs at least one part")
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise StructuralError(f"parts have mismatched dimensions {sorted(dims)}")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def contains(self, x, tol: float = 1e-12) -> bool:
        return all(p.contains(x, tol) for p in self.parts)

    def project(self, y, tol: float = DYKSTRA_TOL, max_iter: int = DYKSTRA_MAX_ITER) -> np.ndarray:
        return project_intersection(y, self, tol=tol, max_iter=max_iter)


@dataclass(frozen=True, eq=False)
class BallSublevelSet:
    """Ball intersected with a quadratic sublevel set, with an exact projector.

    Dykstra crawls when the two sets barely overlap, which is exactly what the
    local window looks like when an infeasible action sits about ``dist`` away
    from the feasible set; this solves the two-multiplier KKT system instead.
    """

    ball: BallSet
    sublevel: SublevelSet

    def __post_init__(self):
        if self.ball.dim != self.sublevel.dim:
            raise StructuralError("ball and sublevel set have different dimensions")

    @property
    def dim(self) -> int:
        return self.ball.dim

    @property
    def parts(self) -> tuple:
        return (self.ball, self.sublevel)

    def contains(self, x, tol: float = 1e-12) -> bool:
        return self.ball.contains(x, tol) and self.sublevel.contains(x, tol)

    def project(self, y) -> np.ndarray:
        return project_ball_sublevel(y, self)


def _check_dim(y, s) -> np.ndarray:
    return as_point(y, s.dim)


def project_ball(y, ball: BallSet) -> np.ndarray:
    y = _check_dim(y, ball)
    d = y - ball.center
    r = float(np.linalg.norm(d))
    if r <= ball.radius:
        return y
    return ball.center + (ball.radius / r) * d


def _sublevel_multiplier(w: np.ndarray, z2: np.ndarray, offset: float) -> float:
    """Root of phi(lam) = 0.5 * sum(w z^2 / (1 + lam w)^2) + offset for lam > 0.

    phi is convex and strictly decreasing on [0, inf), so Newton started left
    of the root never overshoots; a doubling bracket plus bisection fallback
    guards against round-off.
    """

    wz2 = w * z2

    def phi(lam):
        q = 1.0 + lam * w
        t = wz2 / (q * q)
        return 0.5 * t.sum() + offset, -(t * w / q).sum()

    lo, hi = 0.0, 1.0 / w[-1]
    while phi(hi)[0] > 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise NumericalError("could not bracket sublevel multiplier")
    lam = lo
    scale = abs(offset)
    for _ in range(200):
        val, der = phi(lam)
        if abs(val) <= 1e-15 * scale:
            return lam
        if val > 0:
            lo = lam
        else:
            hi = lam
        step = lam - val / der if der < 0 else np.inf
        lam = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 1e-16 * max(hi, 1.0):
            break
    return lam


def project_sublevel(y, s: SublevelSet) -> np.ndarray:
    """Nearest point of {g <= 0} to ``y``, exact up to a scalar root solve."""
    y = _check_dim(y, s)
    g = s.g
    if s.is_empty:
        raise InfeasibleSetError(f"sublevel set is empty (min g = {g.offset:g} > 0)")
    if evaluate(g, y) <= 0:
        return y
    w, Q = g.eigenvalues, g.eigenvectors
    z = Q.T @ (y - g.center)
    if g.offset == 0:
        return g.center.copy()
    lam = _sublevel_multiplier(w, z * z, g.offset)
    return g.center + Q @ (z / (1.0 + lam * w))


def project_ball_sublevel(y, s: BallSublevelSet, xtol: float = 1e-15) -> np.ndarray:
    """Exact projection onto ball ∩ {g <= 0}.

    With the ball multiplier written as t / (1 - t), the minimizer is the
    sublevel projection of (1 - t) y + t a (a = ball center), and the ball
    residual ||x(t) - a|| - r is nonincreasing in t on [0, 1].
    """
    y = _check_dim(y, s)
    a, r = s.ball.center, s.ball.radius
    x0 = project_sublevel(y, s.sublevel)
    if s.ball.contains(x0, 0.0):
        return x0
    xb = project_ball(y, s.ball)
    if s.sublevel.contains(xb, 0.0):
        return xb
    x1 = project_sublevel(a, s.sublevel)
    if np.linalg.norm(x1 - a) > r:
        raise InfeasibleSetError("ball and sublevel set do not intersect")

    def x_of(t):
        return project_sublevel((1.0 - t) * y + t * a, s.sublevel)

    def resid(t):
        return float(np.linalg.norm(x_of(t) - a)) - r

    if resid(1.0) >= 0.0:
        return x1
    t = brentq(resid, 0.0, 1.0, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)
    return x_of(t)


def project_intersection(
    y, s: IntersectionSet, tol: float = DYKSTRA_TOL, max_iter: int = DYKSTRA_MAX_ITER
) -> np.ndarray:
    """Dykstra's alternating projections onto ``s.parts``.

    Stops when a full sweep moves the iterate by less than ``tol``.
    """
    y = _check_dim(y, s)
    parts = s.parts
    if all(p.contains(y, 0.0) for p in parts):
        return y
    # If the nearest point of one part already lies in all others, it is the answer.
    for i, p in enumerate(parts):
        z = p.project(y)
        if all(q.contains(z, 0.0) for j, q in enumerate(parts) if j != i):
            return z
    x = y.copy()
    incr = [np.zeros_like(y) for _ in parts]
    for _ in range(max_iter):
        x_prev = x
        moved = 0.0
        for i, p in enumerate(parts):
            z = p.project(x + incr[i])
            incr[i] = x + incr[i] - z
            moved = max(moved, float(np.linalg.norm(z - x)))
            x = z
        if float(np.linalg.norm(x - x_prev)) < tol and moved < tol:
            return x
    raise NumericalError(
        f"Dykstra did not converge in {max_iter} sweeps", iterate=x, residual=float(np.linalg.norm(x - x_prev))
    )


def min_over_ball(g: QuadraticFunction, ball: BallSet, tol: float = 1e-12, max_iter: int = 200_000):
    """Minimizer and minimum of ``g`` over ``ball`` by projected gradient descent.

    Uses step 1/lambda_max(H); linear convergence follows from strong convexity.
    """
    if g.dim != ball.dim:
        raise StructuralError("dimension mismatch between function and ball")
    step = 1.0 / g.smoothness
    x = project_ball(g.center, ball)
    if np.array_equal(x, g.center):
        return x, evaluate(g, x)
    for _ in range(max_iter):
        x_new = project_ball(x - step * (g.hessian @ (x - g.center)), ball)
        if float(np.linalg.norm(x_new - x)) < tol:
            x = x_new
            break
        x = x_new
    return x, evaluate(g, x)


def is_empty_local(g: QuadraticFunction, ball: BallSet, eps: float = EPS_FEAS) -> bool:
    """True when {g <= 0} does not meet ``ball``."""
    return min_over_ball(g, ball)[1] > eps


def nearest_distance_to_sublevel(y, g: QuadraticFunction) -> float:
    y = as_point(y, g.dim)
    return float(np.linalg.norm(project_sublevel(y, SublevelSet(g)) - y))
