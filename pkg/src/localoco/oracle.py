"""Restricted feedback for one round.

After the learner commits ``a_t`` the environment answers three kinds of
queries: the constraint value at ``a_t``, gradients of f or g, and questions
about the local window {x in ambient : g(x) <= 0} intersected with the ball
B(a_t, dist). Every answer goes through :meth:`RoundOracle._answer`, which
logs it; :class:`ReplayOracle` serves a recorded transcript instead of the
hidden round data.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from localoco.core import AmbientSet, RoundPair, as_point, evaluate, gradient
from localoco.errors import ProtocolError
from localoco.geometry import EPS_FEAS, BallSet, BallSublevelSet, IntersectionSet, SublevelSet, min_over_ball

AMBIENT_TOL = 1e-9


def answer_digest(answer) -> str:
    """Short content hash of an oracle answer (bit-exact)."""
    if isinstance(answer, (bool, np.bool_)):
        raw = b"T" if answer else b"F"
    else:
        raw = np.ascontiguousarray(np.asarray(answer, dtype=float)).tobytes()
    return hashlib.sha256(raw).hexdigest()[:16]


@dataclass(frozen=True)
class TranscriptEntry:
    kind: str
    point: tuple
    answer: object

    @property
    def digest(self) -> str:
        return answer_digest(self.answer)


class LocalFeasibleSet:
    """Query handle on the revealed window around the committed action.

    Supports membership, Euclidean projection, the emptiness flag and the
    minimum of g over B(a_t, dist); all answers are produced by the owning
    oracle so they are counted and logged.
    """

    def __init__(self, oracle: "RoundOracle"):
        self._oracle = oracle
        self.center = oracle.committed_action
        self.radius = oracle.dist

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def empty(self) -> bool:
        return self._oracle._answer("local_empty", self.center, self._oracle._local_empty)

    def min_g(self) -> float:
        return self._oracle._answer("local_min_g", self.center, self._oracle._local_min_g)

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = as_point(x, self.dim)
        return self._oracle._answer("local_contains", x, lambda: self._oracle._local_contains(x, tol))

    def project(self, y) -> np.ndarray:
        y = as_point(y, self.dim)
        return self._oracle._answer("local_project", y, lambda: self._oracle._local_project(y))


class RoundOracle:
    """Environment side of one round; the learner never sees ``round_pair``."""

    def __init__(self, round_pair: RoundPair, ambient: AmbientSet, dist: float):
        self.__round = round_pair
        self.ambient = ambient
        self.dist = float(dist)
        self.dim = ambient.dim
        self.committed_action = None
        self.counters: dict[str, int] = {}
        self.gradient_points_used: list[tuple] = []
        self.transcript: list[TranscriptEntry] = []
        self._window = None
        self._min_cache = None

    # -- protocol -----------------------------------------------------------

    def commit(self, action) -> None:
        if self.committed_action is not None:
            raise ProtocolError("action already committed for this round")
        a = as_point(action, self.dim).copy()
        a.setflags(write=False)
        self.committed_action = a

    def _require_commit(self):
        if self.committed_action is None:
            raise ProtocolError("no action committed yet")

    def _answer(self, kind: str, point, compute):
        self._require_commit()
        out = compute()
        self.counters[kind] = self.counters.get(kind, 0) + 1
        self.transcript.append(TranscriptEntry(kind, tuple(float(v) for v in np.atleast_1d(point)), out))
        return out

    # -- public queries -----------------------------------------------------

    def reveal_constraint_value(self) -> float:
        self._require_commit()
        return self._answer("value_g", self.committed_action, lambda: evaluate(self.__round.g, self.committed_action))

    def query_gradient(self, which: str, x) -> np.ndarray:
        self._require_commit()
        if which not in ("f", "g"):
            raise ProtocolError(f"unknown function {which!r}; expected 'f' or 'g'")
        x = as_point(x, self.dim)
        if not self.ambient.contains(x, AMBIENT_TOL):
            raise ProtocolError("gradient requested outside the ambient set")
        key = tuple(x.tolist())
        if key not in self.gradient_points_used:
            self.gradient_points_used.append(key)
        return self._answer(f"grad_{which}", x, lambda: self._gradient(which, x))

    def query_local_set(self) -> LocalFeasibleSet:
        self._require_commit()
        self.counters["local_set"] = self.counters.get("local_set", 0) + 1
        return LocalFeasibleSet(self)

    @property
    def n_gradient_points(self) -> int:
        return len(self.gradient_points_used)

    # -- answers computed from the hidden round -----------------------------

    def _gradient(self, which, x):
        return gradient(self.__round.f if which == "f" else self.__round.g, x)

    def _window_set(self) -> IntersectionSet:
        if self._window is None:
            ball = BallSet(self.committed_action, self.dist)
            amb = BallSet(self.ambient.center, self.ambient.radius)
            self._window = IntersectionSet((BallSublevelSet(ball, SublevelSet(self.__round.g)), amb))
        return self._window

    def _local_min_g(self) -> float:
        if self._min_cache is None:
            self._min_cache = min_over_ball(self.__round.g, BallSet(self.committed_action, self.dist))[1]
        return self._min_cache

    def _local_empty(self) -> bool:
        return bool(self._local_min_g() > EPS_FEAS)

    def _local_contains(self, x, tol) -> bool:
        return bool(self._window_set().contains(x, tol))

    def _local_project(self, y) -> np.ndarray:
        return self._window_set().project(y)


class ReplayOracle(RoundOracle):
    """Serves answers from a recorded transcript; holds no round data at all."""

    def __init__(self, transcript, ambient: AmbientSet, dist: float):
        self.ambient = ambient
        self.dist = float(dist)
        self.dim = ambient.dim
        self.committed_action = None
        self.counters = {}
        self.gradient_points_used = []
        self.transcript = []
        self._recorded = list(transcript)
        self._pos = 0

    def _answer(self, kind, point, compute):
        self._require_commit()
        if self._pos >= len(self._recorded):
            raise ProtocolError(f"transcript exhausted at query {kind!r}")
        entry = self._recorded[self._pos]
        pt = tuple(float(v) for v in np.atleast_1d(point))
        if entry.kind != kind or entry.point != pt:
            raise ProtocolError(f"replay diverged: expected {entry.kind}@{entry.point}, got {kind}@{pt}")
        self._pos += 1
        self.counters[kind] = self.counters.get(kind, 0) + 1
        self.transcript.append(entry)
        return entry.answer

    def reveal_constraint_value(self) -> float:
        return self._answer("value_g", self.committed_action, None)

    def query_gradient(self, which: str, x) -> np.ndarray:
        x = as_point(x, self.dim)
        key = tuple(x.tolist())
        if key not in self.gradient_points_used:
            self.gradient_points_used.append(key)
        return self._answer(f"grad_{which}", x, None)
