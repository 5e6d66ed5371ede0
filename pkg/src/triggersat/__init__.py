"""triggersat: a parallel CDCL SAT solver whose clause exchange is driven
by bit-parallel trigger tests over packed recent assignments."""

from .core import (
    FALSE,
    TRUE,
    UNDEF,
    ClauseStatus,
    Formula,
    clause_status,
    normalize_clause,
    triggers,
)
from .bitpack import (
    AggregateAssignment,
    AggregateBatch,
    CapacityError,
    PackedAssignmentBatch,
    aggregate_trigger,
    assignment_trigger,
    build_aggregate_batch,
    multi_trigger,
    pack_assignments,
)
from .engine import Engine, EngineConfig, Report, RoundResult
from .solver import ImportOutcome, Solver, SolverParams
from .orchestrator import (
    FinalAnswer,
    InternalError,
    RunConfig,
    Status,
    solve_parallel,
    verify_model,
)
from .instrumentation import (
    ConflictIntervalRecorder,
    EngineStats,
    ValueSubsetCounter,
    stats_summary,
)
from .cli import DimacsDocument, DimacsError, format_dimacs, parse_dimacs

__version__ = "0.1.0"

__all__ = [
    "TRUE", "FALSE", "UNDEF",
    "ClauseStatus", "Formula", "clause_status", "normalize_clause", "triggers",
    "PackedAssignmentBatch", "AggregateAssignment", "AggregateBatch",
    "CapacityError", "pack_assignments", "assignment_trigger",
    "build_aggregate_batch", "aggregate_trigger", "multi_trigger",
    "Engine", "EngineConfig", "Report", "RoundResult",
    "Solver", "SolverParams", "ImportOutcome",
    "RunConfig", "FinalAnswer", "Status", "InternalError",
    "solve_parallel", "verify_model",
    "ConflictIntervalRecorder", "ValueSubsetCounter", "EngineStats",
    "stats_summary",
    "DimacsDocument", "DimacsError", "parse_dimacs", "format_dimacs",
    "__version__",
]
