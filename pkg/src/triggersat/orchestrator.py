"""Parallel portfolio driver: solver threads plus one engine worker.

The solver threads race on the same formula with diversified seeds and
phases while exchanging learned clauses through the engine; the first
definite answer wins and stops everyone.  Statistics and recorders are
collected only after every thread has stopped.
"""

from __future__ import annotations

import enum
import threading
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .core import TRUE, Formula, eval_literal
from .engine import Engine, EngineConfig
from .instrumentation import (
    ConflictIntervalRecorder,
    EngineStats,
    ValueSubsetCounter,
    stats_summary,
)
from .solver import Solver, SolverParams


class Status(enum.Enum):
    SATISFIABLE = "SATISFIABLE"
    UNSATISFIABLE = "UNSATISFIABLE"
    UNKNOWN = "UNKNOWN"


class InternalError(RuntimeError):
    """A solver thread crashed or produced an invalid model."""


@dataclass
class RunConfig:
    threads: int = 4
    use_engine: bool = True
    lane_width: int = 32
    group_width: int = 32
    max_engine_clauses: int = 5_000_000
    seed: int = 0
    timeout: Optional[float] = None
    record_intervals: bool = False
    record_subsets: bool = False

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class FinalAnswer:
    status: Status
    model: Optional[List[int]] = None
    winner: Optional[int] = None
    wall_time: float = 0.0
    solver_stats: List[dict] = field(default_factory=list)
    engine_counters: Optional[dict] = None
    engine_stats: Optional[EngineStats] = None
    intervals: Optional[ConflictIntervalRecorder] = None
    subsets: Optional[ValueSubsetCounter] = None


def verify_model(formula: Formula, values: Sequence[int]) -> bool:
    """True when every clause has a satisfied literal under ``values``."""
    for clause in formula.clauses:
        if not any(eval_literal(values, lit) == TRUE for lit in clause):
            return False
    return True


def _diversified_params(config: RunConfig, thread_id: int) -> SolverParams:
    # distinct activity jitter per thread, alternating default phase
    return SolverParams(
        seed=config.seed * 7919 + thread_id,
        phase_default=bool(thread_id & 1),
    )


def solve_parallel(formula: Formula,
                   config: Optional[RunConfig] = None) -> FinalAnswer:
    config = config or RunConfig()
    formula.validate()
    started = time.perf_counter()

    engine: Optional[Engine] = None
    if config.use_engine:
        engine = Engine(
            formula.num_vars,
            config.threads,
            EngineConfig(
                max_clauses=config.max_engine_clauses,
                lane_width=config.lane_width,
                group_width=config.group_width,
            ),
        )

    solvers: List[Solver] = []
    for t in range(config.threads):
        solver = Solver.from_formula(formula, _diversified_params(config, t),
                                     thread_id=t)
        if engine is not None:
            solver.attach_engine(engine)
        if config.record_intervals:
            solver.interval_recorder = ConflictIntervalRecorder()
        if config.record_subsets:
            solver.subset_counter = ValueSubsetCounter(formula.num_vars)
        solvers.append(solver)

    stop = threading.Event()
    settled = threading.Event()
    lock = threading.Lock()
    answer: dict = {}
    errors: List[tuple] = []

    def work(thread_id: int, solver: Solver) -> None:
        try:
            result = solver.solve(stop=stop)
        except Exception as exc:  # surfaced as InternalError after joining
            with lock:
                errors.append((thread_id, exc))
            stop.set()
            settled.set()
            return
        if result is None:
            return
        with lock:
            if "status" not in answer:
                answer["status"] = result
                answer["winner"] = thread_id
                if result:
                    answer["model"] = solver.model()
        stop.set()
        settled.set()

    workers = [
        threading.Thread(target=work, args=(t, s), daemon=True)
        for t, s in enumerate(solvers)
    ]
    engine_thread = None
    if engine is not None:
        engine_thread = threading.Thread(target=engine.serve, args=(stop,),
                                         daemon=True)
        engine_thread.start()
    for w in workers:
        w.start()

    settled.wait(timeout=config.timeout)
    stop.set()
    for w in workers:
        w.join()
    if engine_thread is not None:
        engine_thread.join()
    wall = time.perf_counter() - started

    if errors:
        thread_id, exc = errors[0]
        raise InternalError(f"solver thread {thread_id} failed: {exc!r}") from exc

    if "status" not in answer:
        status, model, winner = Status.UNKNOWN, None, None
    elif answer["status"]:
        status, model, winner = Status.SATISFIABLE, answer["model"], answer["winner"]
        if not verify_model(formula, model):
            raise InternalError(
                f"thread {winner} returned a model violating the formula")
    else:
        status, model, winner = Status.UNSATISFIABLE, None, answer["winner"]

    intervals = None
    if config.record_intervals:
        intervals = ConflictIntervalRecorder()
        for solver in solvers:
            intervals.merge(solver.interval_recorder)
    subsets = None
    if config.record_subsets:
        subsets = ValueSubsetCounter(formula.num_vars)
        for solver in solvers:
            subsets.merge(solver.subset_counter)

    engine_counters = engine.raw_counters() if engine is not None else None
    engine_stats = stats_summary(engine_counters) if engine_counters else None

    return FinalAnswer(
        status=status,
        model=model,
        winner=winner,
        wall_time=wall,
        solver_stats=[dict(s.stats) for s in solvers],
        engine_counters=engine_counters,
        engine_stats=engine_stats,
        intervals=intervals,
        subsets=subsets,
    )
