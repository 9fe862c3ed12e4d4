"""Per-round case dispatch and action update of the local-information learner.

The learner only talks to a :class:`~localoco.oracle.RoundOracle`; it never
holds the round's functions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from localoco.core import AmbientSet, ConstantsBundle, as_point
from localoco.errors import DegenerateInputError, ProtocolError
from localoco.geometry import BallSet, IntersectionSet, project_ball
from localoco.optimize import OptimizeRequest, optimize_step

EPS_BOUNDARY = 1e-9


class RoundCase(str, enum.Enum):
    STRICT_BIG_BALL = "StrictFeasible_BigBall"
    STRICT_LOCAL = "StrictFeasible_LocalSet"
    BOUNDARY_LOCAL = "Boundary_LocalSet"
    INFEASIBLE_GRADIENT = "Infeasible_GradientStep"
    INFEASIBLE_LOCAL = "Infeasible_LocalSet"
    INFEASIBLE_EMPTY = "Infeasible_EmptyLocal"

    def __str__(self):
        return self.value

    @property
    def gradient_budget(self) -> int:
        return 2 if self is RoundCase.INFEASIBLE_LOCAL else 1


@dataclass(frozen=True, eq=False)
class AlgorithmState:
    t: int
    a: np.ndarray
    constants: ConstantsBundle
    ambient: AmbientSet

    def __post_init__(self):
        a = as_point(self.a, self.ambient.dim).copy()
        a.setflags(write=False)
        object.__setattr__(self, "a", a)


@dataclass(frozen=True, eq=False)
class RoundRecord:
    t: int
    case: RoundCase
    action: np.ndarray
    next_action: np.ndarray
    g_at: float
    delta: float
    gradient_points: int
    transcript: tuple = field(repr=False, default=())
    counters: dict = field(default_factory=dict)

    @property
    def over_budget(self) -> bool:
        return self.gradient_points > self.case.gradient_budget


def window_radius(g_at: float, consts: ConstantsBundle) -> float:
    """delta = |g(a)| / (2 * Lipschitz modulus of g): a ball of this radius keeps the sign of g."""
    return abs(g_at) / (2.0 * consts.lip_g)


def classify_round(
    g_at: float,
    grad_g_at=None,
    local_empty: bool | None = None,
    consts: ConstantsBundle | None = None,
    eps_b: float = EPS_BOUNDARY,
) -> RoundCase:
    """Branch taken for a round, from revealed information only."""
    if consts is None:
        raise ProtocolError("constants are required to classify a round")
    if g_at < -eps_b:
        if window_radius(g_at, consts) >= consts.dist:
            return RoundCase.STRICT_BIG_BALL
        return RoundCase.STRICT_LOCAL
    if g_at <= eps_b:
        return RoundCase.BOUNDARY_LOCAL
    if grad_g_at is None:
        raise ProtocolError("infeasible round needs the constraint gradient at the action")
    if window_radius(g_at, consts) >= float(np.linalg.norm(grad_g_at)) / consts.L_g:
        return RoundCase.INFEASIBLE_GRADIENT
    if local_empty is None:
        raise ProtocolError("infeasible round needs the local-window emptiness flag")
    return RoundCase.INFEASIBLE_EMPTY if local_empty else RoundCase.INFEASIBLE_LOCAL


def initial_state(constants: ConstantsBundle, ambient: AmbientSet, a1=None) -> AlgorithmState:
    """State at t = 1; ``a1`` defaults to the ambient center and is clipped into the ambient set."""
    a = ambient.center if a1 is None else project_ball(a1, BallSet(ambient.center, ambient.radius))
    return AlgorithmState(1, a, constants, ambient)


def advance(state: AlgorithmState, oracle, eps_b: float = EPS_BOUNDARY):
    """Play one round against ``oracle``; returns the next state and the round record."""
    k = state.constants
    a = state.a
    if oracle.committed_action is None:
        oracle.commit(a)
    elif not np.array_equal(oracle.committed_action, a):
        raise ProtocolError("oracle holds a different committed action than the state")
    ambient = BallSet(state.ambient.center, state.ambient.radius)

    g_at = oracle.reveal_constraint_value()
    delta = window_radius(g_at, k)
    grad_g = local = None
    local_empty = None
    if g_at > eps_b:
        grad_g = oracle.query_gradient("g", a)
        if delta < float(np.linalg.norm(grad_g)) / k.L_g:
            local = oracle.query_local_set()
            local_empty = local.empty
    case = classify_round(g_at, grad_g, local_empty, k, eps_b)

    def grad_f(x):
        return oracle.query_gradient("f", x)

    mu = 2.0 * k.L_f
    if case is RoundCase.STRICT_BIG_BALL:
        region = IntersectionSet((BallSet(a, delta), ambient))
        a_next = optimize_step(OptimizeRequest(grad_f, region, mu, a, k.alpha, smoothness=k.L_f))
    elif case in (RoundCase.STRICT_LOCAL, RoundCase.BOUNDARY_LOCAL):
        local = oracle.query_local_set()
        a_next = optimize_step(OptimizeRequest(grad_f, local, mu, a, k.alpha, smoothness=k.L_f))
    elif case is RoundCase.INFEASIBLE_LOCAL:
        a_proj = local.project(a)
        a_next = optimize_step(OptimizeRequest(grad_f, local, mu, a_proj, k.alpha, smoothness=k.L_f))
    elif case is RoundCase.INFEASIBLE_GRADIENT:
        a_hat = a - grad_g / k.L_g
        a_next = project_ball(a + k.alpha * (a_hat - a), ambient)
    else:
        gnorm = float(np.linalg.norm(grad_g))
        if gnorm == 0.0:
            raise DegenerateInputError("zero constraint gradient at an infeasible action")
        a_hat = a - grad_g * (k.dist / gnorm)
        a_next = project_ball(a + k.alpha * (a_hat - a), ambient)

    record = RoundRecord(
        t=state.t,
        case=case,
        action=a,
        next_action=np.array(a_next, dtype=float),
        g_at=g_at,
        delta=delta,
        gradient_points=oracle.n_gradient_points,
        transcript=tuple(oracle.transcript),
        counters=dict(oracle.counters),
    )
    return AlgorithmState(state.t + 1, a_next, k, state.ambient), record
