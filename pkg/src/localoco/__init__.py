"""Local-information projected gradient descent for constrained online convex optimization."""

from localoco.algorithm import AlgorithmState, RoundCase, RoundRecord, advance, classify_round, initial_state
from localoco.benchmark import (
    ContractionConstants,
    Metrics,
    OfflineSolution,
    RunResult,
    SequenceSpec,
    calibrate_drift,
    compute_metrics,
    generate_sequence,
    run_algorithm,
    run_spec,
    solve_offline,
    theoretical_contraction,
)
from localoco.core import (
    AmbientSet,
    ConstantsBundle,
    ProblemSequence,
    QuadraticFunction,
    RoundPair,
    as_point,
    derive_constants,
    evaluate,
    gradient,
)
from localoco.errors import (
    DegenerateInputError,
    InfeasibleSetError,
    LocalOCOError,
    NumericalError,
    ProtocolError,
    StructuralError,
    UsageError,
)
from localoco.geometry import (
    BallSet,
    BallSublevelSet,
    IntersectionSet,
    SublevelSet,
    min_over_ball,
    project_ball,
    project_intersection,
    project_sublevel,
)
from localoco.optimize import OptimizeRequest, optimize_step
from localoco.oracle import LocalFeasibleSet, ReplayOracle, RoundOracle

__version__ = "0.1.0"

__all__ = [
    "AlgorithmState",
    "RoundCase",
    "RoundRecord",
    "advance",
    "classify_round",
    "initial_state",
    "ContractionConstants",
    "Metrics",
    "OfflineSolution",
    "RunResult",
    "SequenceSpec",
    "calibrate_drift",
    "compute_metrics",
    "generate_sequence",
    "run_algorithm",
    "run_spec",
    "solve_offline",
    "theoretical_contraction",
    "AmbientSet",
    "ConstantsBundle",
    "ProblemSequence",
    "QuadraticFunction",
    "RoundPair",
    "as_point",
    "derive_constants",
    "evaluate",
    "gradient",
    "DegenerateInputError",
    "InfeasibleSetError",
    "LocalOCOError",
    "NumericalError",
    "ProtocolError",
    "StructuralError",
    "UsageError",
    "BallSet",
    "BallSublevelSet",
    "IntersectionSet",
    "SublevelSet",
    "min_over_ball",
    "project_ball",
    "project_intersection",
    "project_sublevel",
    "OptimizeRequest",
    "optimize_step",
    "LocalFeasibleSet",
    "ReplayOracle",
    "RoundOracle",
]
