"""Problem generation, offline ground truth, metrics and the simulation harness."""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from localoco.algorithm import RoundCase, RoundRecord, advance, initial_state
from localoco.core import (
    AmbientSet,
    ConstantsBundle,
    ProblemSequence,
    QuadraticFunction,
    RoundPair,
    as_point,
    evaluate,
    gradient,
)
from localoco.errors import InfeasibleSetError, NumericalError, UsageError
from localoco.geometry import BallSet, IntersectionSet, SublevelSet, project_ball
from localoco.oracle import RoundOracle

RATIO_MIN_DENOM = 1e-12


# --------------------------------------------------------------------------
# sequence generation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SequenceSpec:
    """Recipe for a seeded problem sequence.

    Centers of f and g perform persistent random walks with the given
    per-round step lengths; ``turn`` controls how much the heading wanders.
    The constraint ellipsoid is kept entirely inside the ambient ball, so the
    ambient set never binds at the optimum.
    """

    dim: int = 2
    horizon: int = 200
    ambient_radius: float = 5.0
    drift_f: float = 0.0
    drift_g: float = 0.0
    g_level: float = 1.0
    eig_f: tuple = (1.0, 2.0)
    eig_g: tuple = (1.0, 2.0)
    dist: float = 0.2
    alpha: float = 0.5
    seed: int = 0
    turn: float = 0.3
    start: str = "center"

    def __post_init__(self):
        if self.dim < 1 or self.horizon < 1:
            raise UsageError("dim and horizon must be positive")
        if self.ambient_radius <= 0 or self.dist <= 0 or self.g_level <= 0:
            raise UsageError("ambient_radius, dist and g_level must be positive")
        if self.drift_f < 0 or self.drift_g < 0:
            raise UsageError("drift magnitudes must be nonnegative")
        if not 0 < self.alpha <= 1:
            raise UsageError("alpha must lie in (0, 1]")
        for name in ("eig_f", "eig_g"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise UsageError(f"{name} must satisfy 0 < lo <= hi, got {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.start not in ("center", "infeasible"):
            raise UsageError(f"start must be 'center' or 'infeasible', got {self.start!r}")
        if self.g_radius_max >= self.ambient_radius:
            raise UsageError("constraint ellipsoid does not fit inside the ambient ball; lower g_level")
        if max(self.drift_f, self.drift_g) > self.ambient_radius:
            raise UsageError("per-round drift exceeds the ambient radius")

    @property
    def g_radius_max(self) -> float:
        """Longest semi-axis of {g <= 0}."""
        return float(np.sqrt(2.0 * self.g_level / self.eig_g[0]))


def _random_spd(rng, dim, lo, hi) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((dim, dim)))
    Q = Q * np.sign(np.diag(R))
    w = np.sort(rng.uniform(lo, hi, size=dim))
    w[0], w[-1] = lo, hi
    if dim == 1:
        w[0] = rng.uniform(lo, hi)
    H = (Q * w) @ Q.T
    return 0.5 * (H + H.T)


def _unit(rng, dim) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _walk(rng, start, step, heading, radius, turn, n):
    """Persistent random walk of ``n`` points kept inside the ball ||x|| <= radius."""
    pts = [start]
    x, d = start.copy(), heading.copy()
    for _ in range(n - 1):
        if step > 0:
            d = d + turn * rng.standard_normal(d.size)
            d /= np.linalg.norm(d)
            y = x + step * d
            r = np.linalg.norm(y)
            if r > radius:
                normal = y / r
                d = d - 2.0 * (d @ normal) * normal
                y = x + step * d
                r = np.linalg.norm(y)
                if r > radius:
                    y *= radius / r
            x = y
        pts.append(x.copy())
    return pts


def generate_sequence(spec: SequenceSpec) -> ProblemSequence:
    """Deterministic problem sequence for ``spec``."""
    rng = np.random.default_rng(spec.seed)
    n, R = spec.dim, spec.ambient_radius
    H_f = _random_spd(rng, n, *spec.eig_f)
    H_g = _random_spd(rng, n, *spec.eig_g)
    g_room = 0.98 * R - spec.g_radius_max
    if g_room <= 0:
        raise UsageError("no room to place the constraint set inside the ambient ball")
    cg0 = _unit(rng, n) * g_room * rng.uniform(0.0, 0.5)
    cf0 = cg0 + _unit(rng, n) * spec.g_radius_max * rng.uniform(0.5, 1.5)
    cf0 = cf0 * min(1.0, 0.95 * R / max(np.linalg.norm(cf0), 1e-300))
    g_centers = _walk(rng, cg0, spec.drift_g, _unit(rng, n), g_room, spec.turn, spec.horizon)
    f_centers = _walk(rng, cf0, spec.drift_f, _unit(rng, n), 0.95 * R, spec.turn, spec.horizon)
    rounds = [
        RoundPair(QuadraticFunction(H_f, cf), QuadraticFunction(H_g, cg, -spec.g_level))
        for cf, cg in zip(f_centers, g_centers)
    ]
    meta = {"spec": asdict(spec)}
    return ProblemSequence(rounds, AmbientSet(np.zeros(n), R), spec.dist, spec.alpha, meta)


def infeasible_start(problem: ProblemSequence, n_dirs: int = 256) -> np.ndarray:
    """Point on the ambient sphere where g_1 is largest (sampled over directions)."""
    amb = problem.ambient
    g = problem.rounds[0].g
    n = amb.dim
    if n == 1:
        cands = [amb.center - amb.radius, amb.center + amb.radius]
    else:
        ang = np.linspace(0.0, 2 * np.pi, n_dirs, endpoint=False)
        if n == 2:
            dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        else:
            dirs = np.random.default_rng(0).standard_normal((n_dirs, n))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        cands = amb.center + amb.radius * dirs
    return np.array(max(cands, key=lambda x: evaluate(g, x)), dtype=float)


def sequence_digest(problem: ProblemSequence) -> str:
    """sha256 of the canonical JSON form of the sequence."""
    return hashlib.sha256(problem.to_json().encode()).hexdigest()


# --------------------------------------------------------------------------
# offline ground truth
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OfflineSolution:
    x_star: np.ndarray
    f_at_star: float
    g_at_star: float
    kkt_residual: float
    iterations: int = 0


def feasible_region(r: RoundPair, ambient: AmbientSet) -> IntersectionSet:
    return IntersectionSet((SublevelSet(r.g), BallSet(ambient.center, ambient.radius)))


def solve_offline(
    r: RoundPair, ambient: AmbientSet, x0=None, tol: float = 1e-12, max_iter: int = 100_000
) -> OfflineSolution:
    """argmin of f over {g <= 0} within the ambient ball, by projected gradient descent."""
    if r.g.offset >= 0:
        raise InfeasibleSetError("constraint set has no strictly feasible point")
    C = feasible_region(r, ambient)
    step = 1.0 / r.f.smoothness
    x = C.project(r.f.center if x0 is None else as_point(x0, r.dim))
    for it in range(1, max_iter + 1):
        x_new = C.project(x - step * gradient(r.f, x), tol=1e-13)
        moved = float(np.linalg.norm(x_new - x))
        x = x_new
        if moved < tol:
            break
    else:
        raise NumericalError("offline solver did not converge", iterate=x, residual=moved)
    return OfflineSolution(x, evaluate(r.f, x), evaluate(r.g, x), kkt_residual(r, ambient, x), it)


def kkt_residual(r: RoundPair, ambient: AmbientSet, x) -> float:
    """max(gradient-mapping norm, constraint violation) at ``x``."""
    C = feasible_region(r, ambient)
    L = r.f.smoothness
    gm = L * float(np.linalg.norm(x - C.project(x - gradient(r.f, x) / L, tol=1e-14)))
    viol = max(evaluate(r.g, x), float(np.linalg.norm(x - ambient.center)) - ambient.radius, 0.0)
    return max(gm, viol)


# --------------------------------------------------------------------------
# constants and metrics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ContractionConstants:
    c2: float
    c3: float
    c4: float
    c5: float
    c: float


def contraction_components(consts: ConstantsBundle) -> ContractionConstants:
    """Per-case contraction factors and their maximum, without range checks on c."""
    k = consts
    if k.nu_f > k.L_f or k.nu_g > k.L_g:
        raise UsageError("strong convexity modulus exceeds smoothness modulus")
    a = k.alpha
    c2 = float(np.sqrt(1.0 - a * k.nu_f / (2.0 * k.L_f)))
    c3 = float((k.D + a * k.dist) / (k.D + k.dist))
    c4 = float(np.sqrt(max(0.0, 1.0 - a * k.nu_g / k.L_g)))
    c5 = float(np.sqrt(max(0.0, 1.0 - a * k.nu_g / max(k.G / k.dist, k.L_g))))
    return ContractionConstants(c2, c3, c4, c5, max(c2, c3, c4, c5))


def theoretical_contraction(consts: ConstantsBundle) -> ContractionConstants:
    """Contraction factors; raises unless the overall factor lies in (0, 1)."""
    cc = contraction_components(consts)
    if not 0 < cc.c < 1:
        raise UsageError(f"contraction constant c={cc.c} outside (0, 1)")
    return cc


@dataclass(frozen=True, eq=False)
class Metrics:
    R_d: float
    P_g: float
    P_g_prime: float
    V: float
    ratios: np.ndarray
    c_empirical: float
    distance_sum: float
    f_gaps: np.ndarray = field(repr=False, default=None)


def path_length(points) -> float:
    pts = [np.asarray(p, dtype=float) for p in points]
    return float(sum(np.linalg.norm(b - a) for a, b in zip(pts[:-1], pts[1:])))


def compute_metrics(actions, solutions, rounds) -> Metrics:
    """Regret, constraint penalties and path length.

    ``actions`` holds a_1..a_T and optionally a_{T+1}; contraction ratios are
    formed wherever the next action is available.
    """
    T = len(rounds)
    if len(solutions) != T or len(actions) not in (T, T + 1):
        raise UsageError(f"length mismatch: {len(actions)} actions, {len(solutions)} solutions, {T} rounds")
    f_gaps, R_d, P_g, P_gp, dsum = [], 0.0, 0.0, 0.0, 0.0
    for a, s, r in zip(actions, solutions, rounds):
        fa, ga = evaluate(r.f, a), evaluate(r.g, a)
        f_gaps.append(fa - s.f_at_star)
        R_d += abs(s.f_at_star - fa)
        P_g += abs(s.g_at_star - ga)
        P_gp += ga
        dsum += float(np.linalg.norm(s.x_star - a))
    ratios = np.full(T, np.nan)
    for t in range(min(T, len(actions) - 1)):
        den = float(np.linalg.norm(solutions[t].x_star - actions[t]))
        if den >= RATIO_MIN_DENOM:
            ratios[t] = float(np.linalg.norm(solutions[t].x_star - actions[t + 1])) / den
    finite = ratios[np.isfinite(ratios)]
    return Metrics(
        R_d=R_d,
        P_g=P_g,
        P_g_prime=P_gp,
        V=path_length([s.x_star for s in solutions]),
        ratios=ratios,
        c_empirical=float(finite.max()) if finite.size else 0.0,
        distance_sum=dsum,
        f_gaps=np.array(f_gaps),
    )


def distance_sum_bound(first_gap: float, last_gap: float, V: float, c: float) -> float:
    """Upper bound on sum_t ||x_t* - a_t|| implied by per-round contraction c."""
    return (first_gap - c * last_gap + V) / (1.0 - c)


# --------------------------------------------------------------------------
# harness
# --------------------------------------------------------------------------


@dataclass(eq=False)
class RunResult:
    problem: ProblemSequence
    constants: ConstantsBundle
    contraction: ContractionConstants | None
    records: list
    actions: list
    solutions: list
    metrics: Metrics
    mode: str = "online"

    @property
    def histogram(self) -> dict:
        cnt = Counter(r.case.value for r in self.records)
        return {c.value: cnt.get(c.value, 0) for c in RoundCase}

    def contraction_violations(self, slack: float = 1e-6) -> list:
        """Rounds where ||x_t* - a_{t+1}|| > (c + slack) ||x_t* - a_t||."""
        if self.contraction is None:
            raise UsageError("no contraction constant below 1 for this run")
        c = self.contraction.c
        out = []
        for t, s in enumerate(self.solutions):
            if t + 1 >= len(self.actions):
                break
            before = float(np.linalg.norm(s.x_star - self.actions[t]))
            after = float(np.linalg.norm(s.x_star - self.actions[t + 1]))
            if before >= RATIO_MIN_DENOM and after > (c + slack) * before:
                out.append((t + 1, after, before))
        return out

    def regret_bounds(self) -> dict:
        """Cumulative bounds with the first-gap term and realized path length."""
        if self.contraction is None:
            raise UsageError("no contraction constant below 1 for this run")
        c = self.contraction.c
        first = float(np.linalg.norm(self.solutions[0].x_star - self.actions[0]))
        base = (first + self.metrics.V) / (1.0 - c)
        return {
            "distance_sum_bound": base,
            "R_d_bound": self.constants.lip_f * base,
            "P_g_bound": self.constants.lip_g * base,
        }

    def gradient_audit(self) -> list:
        """Records whose gradient-point usage exceeds the per-case allowance."""
        return [r for r in self.records if r.over_budget]


def run_algorithm(
    problem: ProblemSequence,
    a1=None,
    constants: ConstantsBundle | None = None,
    solutions=None,
    mode: str = "online",
) -> RunResult:
    """Play the learner over every round and score it against offline optima.

    ``mode="oracle"`` bypasses the learner and plays a_t = x_t* (metric sanity mode).
    """
    k = constants or problem.constants()
    try:
        contraction = theoretical_contraction(k)
    except UsageError:
        # alpha = 1 gives c = 1: the run is still meaningful, the bound is not
        contraction = None
    if solutions is None:
        solutions = offline_solutions(problem)
    records: list[RoundRecord] = []
    if mode == "oracle":
        actions = [s.x_star.copy() for s in solutions]
    elif mode == "online":
        state = initial_state(k, problem.ambient, a1)
        actions = [np.array(state.a)]
        for r in problem.rounds:
            oracle = RoundOracle(r, problem.ambient, k.dist)
            state, rec = advance(state, oracle)
            records.append(rec)
            actions.append(np.array(state.a))
    else:
        raise UsageError(f"unknown mode {mode!r}")
    metrics = compute_metrics(actions, solutions, problem.rounds)
    return RunResult(problem, k, contraction, records, actions, solutions, metrics, mode)


def offline_solutions(problem: ProblemSequence, tol: float = 1e-12) -> list:
    """Offline optimum of every round, each solve warm-started at the previous one."""
    out, prev = [], None
    for r in problem.rounds:
        s = solve_offline(r, problem.ambient, x0=prev, tol=tol)
        out.append(s)
        prev = s.x_star
    return out


@dataclass(eq=False)
class Calibration:
    spec: SequenceSpec
    problem: ProblemSequence
    solutions: list
    V: float


class _Hit(Exception):
    pass


def calibrate_drift(
    spec: SequenceSpec, target_V: float, rtol: float = 0.02, g_share: float = 0.5, search_tol: float = 1e-9
) -> Calibration:
    """Find the center drift whose realized optimum path length is ``target_V``.

    The f-center moves by ``d`` per round and the g-center by ``g_share * d``;
    the seed is held fixed so V is a continuous function of ``d``. The search
    solves offline to ``search_tol``; the returned solutions are full precision.
    """
    if target_V < 0:
        raise UsageError("target path length must be nonnegative")

    def path(d):
        prob = generate_sequence(replace(spec, drift_f=d, drift_g=g_share * d))
        return path_length([s.x_star for s in offline_solutions(prob, tol=search_tol)])

    def resid(d):
        v = path(d) - target_V
        if abs(v) <= rtol * target_V:
            raise _Hit(d)
        return v

    d = 0.0
    if target_V > 0:
        lo, hi = 0.0, target_V / max(spec.horizon - 1, 1)
        try:
            while resid(hi) < 0:
                lo, hi = hi, 2.0 * hi
                if hi > spec.ambient_radius:
                    raise UsageError(f"path length {target_V} not reachable within the ambient ball")
            d = brentq(resid, lo, hi, xtol=1e-12)
        except _Hit as hit:
            d = hit.args[0]
    sp = replace(spec, drift_f=d, drift_g=g_share * d)
    prob = generate_sequence(sp)
    sols = offline_solutions(prob)
    return Calibration(sp, prob, sols, path_length([s.x_star for s in sols]))


def run_spec(spec: SequenceSpec, **kw) -> RunResult:
    problem = generate_sequence(spec)
    a1 = infeasible_start(problem) if spec.start == "infeasible" else None
    return run_algorithm(problem, a1=a1, **kw)
