"""Range-fair k-center clustering.

Centers are chosen under per-group lower and upper quotas. The offline solver
is a 3-approximation built on farthest-first traversal plus a max-flow
replacement test; the streaming solver keeps a geometric ladder of radius
guesses and answers in one pass with constant-factor quality and memory
independent of the stream length.
"""

from .core import (
    CenterSet,
    Dataset,
    DegenerateStreamError,
    FairKCenterError,
    FairnessBounds,
    InfeasibleInstanceError,
    OracleScaleError,
    ParseError,
    PointRecord,
    ProblemInstance,
    check_fairness,
    derive_bounds_from_factors,
    derive_proportional_bounds,
    equality_allocation,
    minmax_normalize,
    objective,
    validate_instance,
)
from .fairshift import ShiftCandidate, ShiftResult, fair_shift
from .gonzalez import GonzalezTrace, gonzalez, gonzalez_on_subset
from .harness import (
    ExperimentConfig,
    Report,
    SyntheticSpec,
    emit_report,
    generate_blobs,
    ingest_csv,
    load_report,
    run_experiment,
)
from .offline import (
    HeuristicAllocation,
    SolveStats,
    complete_centers,
    find_max_prefix,
    heuristic_allocation,
    minimize_shift_distance,
    solve_equality,
    solve_offline,
)
from .oracle import (
    ExactSolution,
    brute_force_fair_shift,
    brute_force_optimal,
    reference_max_flow,
)
from .streaming import GuessInstance, GuessLadder, StreamStats, stream_solve

__version__ = "0.1.0"

__all__ = [
    "CenterSet",
    "Dataset",
    "DegenerateStreamError",
    "ExactSolution",
    "ExperimentConfig",
    "FairKCenterError",
    "FairnessBounds",
    "GonzalezTrace",
    "GuessInstance",
    "GuessLadder",
    "HeuristicAllocation",
    "InfeasibleInstanceError",
    "OracleScaleError",
    "ParseError",
    "PointRecord",
    "ProblemInstance",
    "Report",
    "ShiftCandidate",
    "ShiftResult",
    "SolveStats",
    "StreamStats",
    "SyntheticSpec",
    "brute_force_fair_shift",
    "brute_force_optimal",
    "check_fairness",
    "complete_centers",
    "derive_bounds_from_factors",
    "derive_proportional_bounds",
    "emit_report",
    "equality_allocation",
    "fair_shift",
    "find_max_prefix",
    "generate_blobs",
    "gonzalez",
    "gonzalez_on_subset",
    "heuristic_allocation",
    "ingest_csv",
    "load_report",
    "minimize_shift_distance",
    "minmax_normalize",
    "objective",
    "reference_max_flow",
    "run_experiment",
    "solve_equality",
    "solve_offline",
    "stream_solve",
    "validate_instance",
]
