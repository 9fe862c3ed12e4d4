"""Independent reference computations used only by the tests.

The grid oracle knows nothing about projection formulas or multipliers: it
evaluates set membership on a 400x400 grid, adds boundary points found by
bisecting grid edges that cross the boundary, takes the best candidate and
zooms in around it.
"""

import numpy as np

from localoco.core import AmbientSet, QuadraticFunction
from localoco.geometry import BallSet, BallSublevelSet, IntersectionSet, SublevelSet

GRID_N = 400


def quad_values(h: QuadraticFunction, P: np.ndarray) -> np.ndarray:
    d = P - h.center
    return 0.5 * np.einsum("...i,ij,...j->...", d, h.hessian, d) + h.offset


def member_fn(s):
    """Vectorized exact membership test for the library's set types."""
    if isinstance(s, (BallSet, AmbientSet)):
        return lambda P: np.linalg.norm(P - s.center, axis=-1) <= s.radius
    if isinstance(s, SublevelSet):
        return lambda P: quad_values(s.g, P) <= 0.0
    if isinstance(s, (IntersectionSet, BallSublevelSet)):
        fns = [member_fn(p) for p in s.parts]
        return lambda P: np.logical_and.reduce([f(P) for f in fns])
    raise TypeError(type(s).__name__)


def bounding_box(s):
    if isinstance(s, (BallSet, AmbientSet)):
        return s.center - s.radius, s.center + s.radius
    if isinstance(s, SublevelSet):
        half = np.sqrt(2.0 * max(-s.g.offset, 0.0) / s.g.strong_convexity)
        return s.g.center - half, s.g.center + half
    boxes = [bounding_box(p) for p in s.parts]
    return np.max([b[0] for b in boxes], axis=0), np.min([b[1] for b in boxes], axis=0)


def _boundary_points(P, M, member, steps):
    ins, outs = [], []
    for a, b, ma, mb in (
        (P[:, :-1], P[:, 1:], M[:, :-1], M[:, 1:]),
        (P[:-1, :], P[1:, :], M[:-1, :], M[1:, :]),
    ):
        cross = ma != mb
        ins.append(np.where(ma[cross][:, None], a[cross], b[cross]))
        outs.append(np.where(ma[cross][:, None], b[cross], a[cross]))
    p, q = np.concatenate(ins), np.concatenate(outs)
    for _ in range(steps):
        mid = 0.5 * (p + q)
        m = member(mid)[:, None]
        p, q = np.where(m, mid, p), np.where(m, q, mid)
    return p


def grid_argmin(objective, member, lo, hi, n=GRID_N, levels=3, zoom=10.0, bisect_steps=60):
    """Minimize ``objective`` over {member} in 2-D by zoomed grid search."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    best = None
    for _ in range(levels):
        xs, ys = np.linspace(lo[0], hi[0], n), np.linspace(lo[1], hi[1], n)
        P = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1)
        M = member(P)
        cand = np.concatenate([P[M], _boundary_points(P, M, member, bisect_steps)])
        if best is not None:
            cand = np.vstack([cand, best])
        if cand.size == 0:
            raise ValueError("grid found no feasible point")
        best = cand[np.argmin(objective(cand))]
        h = max(xs[1] - xs[0], ys[1] - ys[0])
        lo, hi = best - zoom * h, best + zoom * h
    return best


def grid_project(y, s):
    y = np.asarray(y, float)
    lo, hi = bounding_box(s)
    return grid_argmin(lambda P: np.sum((P - y) ** 2, axis=-1), member_fn(s), lo, hi)


def grid_offline(r, ambient):
    """argmin of f over {g <= 0} within the ambient ball, by grid search."""
    s = IntersectionSet((SublevelSet(r.g), BallSet(ambient.center, ambient.radius)))
    lo, hi = bounding_box(s)
    return grid_argmin(lambda P: quad_values(r.f, P), member_fn(s), lo, hi)


def region_argmin(h: QuadraticFunction, region, x0=None, tol=1e-14, max_iter=200_000):
    """argmin of ``h`` over ``region`` by projected gradient descent with step 1/L."""
    x = region.project(h.center if x0 is None else x0)
    step = 1.0 / h.smoothness
    for _ in range(max_iter):
        x_new = region.project(x - step * h.grad(x))
        if np.linalg.norm(x_new - x) < tol:
            return x_new
        x = x_new
    return x


def random_spd(rng, n, lo=0.5, hi=3.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    H = (Q * rng.uniform(lo, hi, n)) @ Q.T
    return 0.5 * (H + H.T)


def random_quadratic(rng, n, offset=0.0, scale=1.0, lo=0.5, hi=3.0):
    return QuadraticFunction(random_spd(rng, n, lo, hi), scale * rng.standard_normal(n), offset)
