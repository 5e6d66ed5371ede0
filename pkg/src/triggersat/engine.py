"""The clause-exchange engine.

One engine instance owns the shared store of every clause the solver
threads have learned.  Solver threads push learned clauses and assignment
snapshots in through bounded channels; the engine, on its own worker
thread, repeatedly drains the pending snapshots, tests the whole store
against them with the bit-parallel kernels, and queues a report to a
thread whenever a clause would have been useful to it (conflicting or
unit) on one of its recent snapshots.  Threads import exactly what is
reported to them.

Clauses are tested independently of each other, so a round is a flat
data-parallel sweep: here it is vectorized with numpy over each size
bucket of the store; any backend with the same per-clause independence
(e.g. one massively parallel device thread per clause) satisfies the same
contract.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import bitpack
from .bitpack import (
    AggregateBatch,
    PackedAssignmentBatch,
    build_aggregate_batch,
    iter_set_bits,
    pack_assignments,
)

_ALL_ONES_64 = np.uint64(0xFFFFFFFFFFFFFFFF)

#: Activities are rescaled when the bump increment passes this.
_ACTIVITY_RESCALE = 1e100


@dataclass
class EngineConfig:
    """Tunables for the exchange engine.

    ``max_clauses`` bounds the store (millions in production-sized runs);
    ``assignment_queue_capacity`` bounds each thread's pending-snapshot
    queue and defaults to two full batches.  ``trace`` keeps a per-round
    log of snapshots, store contents and reports for offline checking;
    only suitable for small runs.
    """

    max_clauses: int = 5_000_000
    assignment_queue_capacity: Optional[int] = None
    lane_width: int = 32
    group_width: int = 32
    activity_decay: float = 0.999
    reduce_keep_fraction: float = 0.5
    interleave_stride: int = 32
    trace: bool = False

    def __post_init__(self):
        if self.max_clauses < 1:
            raise ValueError("max_clauses must be >= 1")
        if not 0 < self.activity_decay <= 1:
            raise ValueError("activity_decay must be in (0, 1]")
        if not 0 < self.reduce_keep_fraction < 1:
            raise ValueError("reduce_keep_fraction must be in (0, 1)")
        if self.assignment_queue_capacity is None:
            self.assignment_queue_capacity = 2 * self.lane_width
        if self.assignment_queue_capacity < 1:
            raise ValueError("assignment_queue_capacity must be >= 1")


@dataclass
class AssignmentSnapshot:
    """One thread's trail at a propagation fixpoint.

    The sender guarantees the values are a fixpoint of unit propagation
    with no conflicting clause; the engine does not re-check.
    """

    thread_id: int
    values: np.ndarray
    seq: int


@dataclass
class Report:
    """Engine-to-solver notice that a stored clause just triggered.

    Carries the full literals so the receiving thread never has to read
    the store.  ``lane_mask`` identifies the triggering snapshots within
    the batch that was tested.
    """

    destination: int
    lits: tuple
    engine_id: int
    lane_mask: int


@dataclass
class RoundResult:
    reports_emitted: int = 0
    clauses_tested: int = 0
    assignments_consumed: int = 0
    aggregate_tests_negative: int = 0


@dataclass
class RoundTrace:
    """Offline-checkable record of one round (trace mode only)."""

    snapshots: list
    store: list
    reports: list


class _SizeBucket:
    """Interleaved storage for all clauses of one size.

    Literal data is laid out in blocks of ``stride`` clauses: within a
    block, literal ``j`` of all clauses is contiguous, so a data-parallel
    sweep that walks literal positions reads consecutive memory.  Slot
    ``k`` of the bucket lives in block ``k // stride`` at offset
    ``k % stride``.
    """

    def __init__(self, size: int, stride: int):
        self.size = size
        self.stride = stride
        self.count = 0
        self.data = np.zeros(size * stride * 4, dtype=np.int32)
        self.engine_ids = np.zeros(stride * 4, dtype=np.int64)
        self.activities = np.zeros(stride * 4, dtype=np.float64)
        self.origins = np.zeros(stride * 4, dtype=np.int32)

    def _grow(self) -> None:
        blocks = len(self.engine_ids) // self.stride
        new_blocks = max(blocks * 2, 4)
        self.data = np.resize(self.data, self.size * self.stride * new_blocks)
        self.data[self.size * self.stride * blocks:] = 0
        self.engine_ids = np.resize(self.engine_ids, self.stride * new_blocks)
        self.activities = np.resize(self.activities, self.stride * new_blocks)
        self.origins = np.resize(self.origins, self.stride * new_blocks)

    def insert(self, lits: Sequence[int], engine_id: int, origin: int,
               activity: float) -> int:
        if self.count == len(self.engine_ids):
            self._grow()
        slot = self.count
        block, offset = divmod(slot, self.stride)
        base = block * self.size * self.stride + offset
        for j, lit in enumerate(lits):
            self.data[base + j * self.stride] = lit
        self.engine_ids[slot] = engine_id
        self.activities[slot] = activity
        self.origins[slot] = origin
        self.count += 1
        return slot

    def lits_at(self, slot: int) -> tuple:
        block, offset = divmod(slot, self.stride)
        base = block * self.size * self.stride + offset
        step = self.stride
        return tuple(int(self.data[base + j * step]) for j in range(self.size))

    def literal_columns(self) -> list:
        """Literal ``j`` of every stored clause, one array per position.

        Each returned array is indexed by slot (clause) number.
        """
        if self.count == 0:
            return [np.zeros(0, dtype=np.int32) for _ in range(self.size)]
        blocks = -(-self.count // self.stride)
        view = self.data[: blocks * self.size * self.stride].reshape(
            blocks, self.size, self.stride
        )
        return [view[:, j, :].reshape(-1)[: self.count] for j in range(self.size)]

    def compact(self, keep: np.ndarray) -> None:
        """Drop the slots where ``keep`` is False, preserving order."""
        kept = int(np.count_nonzero(keep[: self.count]))
        if kept == self.count:
            return
        cols = self.literal_columns()
        mask = keep[: self.count]
        new_lits = [col[mask] for col in cols]
        self.engine_ids[:kept] = self.engine_ids[: self.count][mask]
        self.activities[:kept] = self.activities[: self.count][mask]
        self.origins[:kept] = self.origins[: self.count][mask]
        self.count = kept
        for slot in range(kept):
            block, offset = divmod(slot, self.stride)
            base = block * self.size * self.stride + offset
            for j in range(self.size):
                self.data[base + j * self.stride] = new_lits[j][slot]


class ClauseStore:
    """Size-bucketed clause storage with per-clause metadata."""

    def __init__(self, stride: int = 32):
        self.stride = stride
        self.buckets: Dict[int, _SizeBucket] = {}

    def __len__(self) -> int:
        return sum(b.count for b in self.buckets.values())

    def insert(self, lits: Sequence[int], engine_id: int, origin: int,
               activity: float) -> None:
        size = len(lits)
        bucket = self.buckets.get(size)
        if bucket is None:
            bucket = self.buckets[size] = _SizeBucket(size, self.stride)
        bucket.insert(lits, engine_id, origin, activity)

    def clauses(self):
        """Iterate ``(engine_id, lits, origin, activity)`` over the store."""
        for size in sorted(self.buckets):
            bucket = self.buckets[size]
            for slot in range(bucket.count):
                yield (
                    int(bucket.engine_ids[slot]),
                    bucket.lits_at(slot),
                    int(bucket.origins[slot]),
                    float(bucket.activities[slot]),
                )

    def scale_activities(self, factor: float) -> None:
        for bucket in self.buckets.values():
            bucket.activities[: bucket.count] *= factor


def _bucket_aggregate_trigger(bucket: _SizeBucket, agg: AggregateBatch) -> np.ndarray:
    """Aggregate trigger words for every clause of a bucket at once.

    Same recurrence as :func:`triggersat.bitpack.aggregate_trigger`, run
    over all clauses in parallel: one gather per literal position.
    """
    count = bucket.count
    all_false = np.full(count, _ALL_ONES_64, dtype=np.uint64)
    one_undef = np.zeros(count, dtype=np.uint64)
    for col in bucket.literal_columns():
        v = np.abs(col)
        neg = col < 0
        cbf = np.where(neg, agg.can_be_true[v], agg.can_be_false[v])
        cbu = agg.can_be_undef[v]
        one_undef = (all_false & cbu) | (one_undef & cbf)
        all_false &= cbf
    return (all_false | one_undef) & np.uint64(agg.group_mask)


class Engine:
    """Owns the shared clause store and runs the exchange rounds.

    ``add_clause`` and ``submit_assignment`` may be called concurrently
    from any solver thread; ``run_round`` and ``reduce_store`` run only on
    the engine worker.  All cross-thread traffic goes through the staging
    list, the per-thread snapshot queues and the per-thread report queues.
    """

    def __init__(self, num_vars: int, thread_count: int,
                 config: Optional[EngineConfig] = None):
        self.config = config or EngineConfig()
        self.num_vars = num_vars
        self.thread_count = thread_count
        self.store = ClauseStore(stride=self.config.interleave_stride)

        self._id_lock = threading.Lock()
        self._next_id = 0
        self._staged: List[Tuple[int, tuple, int]] = []

        self._queue_lock = threading.Lock()
        self._snapshots: Dict[int, deque] = {t: deque() for t in range(thread_count)}
        self._reports: Dict[int, deque] = {t: deque() for t in range(thread_count)}

        self._activity_inc = 1.0
        self._reduce_watermark = 0

        self.counters = {
            "rounds": 0,
            "clauses_added": 0,
            "clauses_dropped": 0,
            "clauses_removed": 0,
            "reduces": 0,
            "snapshots_accepted": 0,
            "snapshots_dropped": 0,
            "snapshots_consumed": 0,
            "aggregate_tests": 0,
            "aggregate_tests_negative": 0,
            "lane_tests": 0,
            "lane_triggers": 0,
            "reports_delivered": 0,
            "busy_seconds": 0.0,
        }
        self.trace: List[RoundTrace] = []

    # ------------------------------------------------------------------
    # producer side (solver threads)

    def add_clause(self, lits: Sequence[int], origin: int) -> int:
        """Stage a learned clause for the store; returns its engine id.

        Ids are unique and never reused.  Duplicate literal sets are
        allowed: deduplication happens on the importing side, which keeps
        the store a single-owner structure.
        """
        lits = tuple(lits)
        with self._id_lock:
            engine_id = self._next_id
            self._next_id += 1
            self._staged.append((engine_id, lits, origin))
        return engine_id

    def submit_assignment(self, snapshot: AssignmentSnapshot) -> bool:
        """Queue a snapshot for the next round; False when the queue is full.

        A full queue drops the incoming snapshot (counted, never blocks):
        the engine simply cannot keep up, and the search must not wait.
        """
        cap = self.config.assignment_queue_capacity
        with self._queue_lock:
            q = self._snapshots.setdefault(snapshot.thread_id, deque())
            if len(q) >= cap:
                self.counters["snapshots_dropped"] += 1
                return False
            q.append(snapshot)
            self.counters["snapshots_accepted"] += 1
            return True

    def drain_reports(self, thread_id: int) -> List[Report]:
        """All queued reports for a thread, oldest first."""
        with self._queue_lock:
            q = self._reports.get(thread_id)
            if not q:
                return []
            out = list(q)
            q.clear()
            return out

    # ------------------------------------------------------------------
    # engine worker side

    def _integrate_exports(self) -> None:
        with self._id_lock:
            staged, self._staged = self._staged, []
        for engine_id, lits, origin in staged:
            if len(self.store) >= self.config.max_clauses:
                self.reduce_store()
                if len(self.store) >= self.config.max_clauses:
                    self.counters["clauses_dropped"] += 1
                    continue
            self.store.insert(lits, engine_id, origin, self._activity_inc)
            self.counters["clauses_added"] += 1

    def _drain_snapshots(self) -> Dict[int, list]:
        with self._queue_lock:
            pending = {}
            for tid, q in self._snapshots.items():
                if q:
                    pending[tid] = list(q)
                    q.clear()
            return pending

    def run_round(self) -> RoundResult:
        """One exchange round: drain, test everything, report, bump.

        Pending snapshots are grouped per origin thread (successive
        snapshots of one thread resemble each other, which keeps the
        aggregate filter sharp), packed into lane batches, and the whole
        store is tested against them.  Each (clause, thread) positive
        yields at most one report per round; every triggering lane bumps
        the clause's activity.  Consumed snapshots are never retested.
        """
        started = time.perf_counter()
        self._integrate_exports()
        # captured before testing so a capacity reduce below cannot skew it
        store_snapshot = None
        if self.config.trace:
            store_snapshot = [(eid, lits) for eid, lits, _, _ in self.store.clauses()]
        pending = self._drain_snapshots()
        result = RoundResult()
        result.assignments_consumed = sum(len(v) for v in pending.values())
        self.counters["snapshots_consumed"] += result.assignments_consumed

        groups: List[Tuple[int, PackedAssignmentBatch]] = []
        lane_width = self.config.lane_width
        for tid in sorted(pending):
            snaps = pending[tid]
            for i in range(0, len(snaps), lane_width):
                chunk = snaps[i:i + lane_width]
                batch = pack_assignments(
                    [s.values for s in chunk], self.num_vars, lane_width
                )
                groups.append((tid, batch))

        reported = set()
        reports: List[Report] = []
        if groups:
            gw = self.config.group_width
            for start in range(0, len(groups), gw):
                chunk = groups[start:start + gw]
                self._test_chunk(chunk, reported, reports, result)

        if reports:
            with self._queue_lock:
                for rep in reports:
                    self._reports.setdefault(rep.destination, deque()).append(rep)
            self.counters["reports_delivered"] += len(reports)
            result.reports_emitted = len(reports)

        if result.assignments_consumed:
            self._activity_inc /= self.config.activity_decay
            if self._activity_inc > _ACTIVITY_RESCALE:
                self.store.scale_activities(1.0 / _ACTIVITY_RESCALE)
                self._activity_inc /= _ACTIVITY_RESCALE

        if len(self.store) > self.config.max_clauses:
            self.reduce_store()

        if self.config.trace:
            self.trace.append(RoundTrace(
                snapshots=[(s.thread_id, np.array(s.values, copy=True))
                           for snaps in pending.values() for s in snaps],
                store=store_snapshot,
                reports=list(reports),
            ))

        self.counters["rounds"] += 1
        self.counters["busy_seconds"] += time.perf_counter() - started
        return result

    def _test_chunk(self, chunk, reported, reports, result) -> None:
        agg = build_aggregate_batch([b for _, b in chunk], self.config.group_width)
        total_lanes = sum(b.lane_count for _, b in chunk)
        n_groups = len(chunk)
        for size, bucket in self.store.buckets.items():
            if bucket.count == 0:
                continue
            words = _bucket_aggregate_trigger(bucket, agg)
            result.clauses_tested += bucket.count
            self.counters["aggregate_tests"] += bucket.count * n_groups
            self.counters["lane_tests"] += bucket.count * total_lanes
            positives = 0
            for slot in np.nonzero(words)[0]:
                word = int(words[slot])
                positives += bin(word).count("1")
                lits = bucket.lits_at(int(slot))
                engine_id = int(bucket.engine_ids[slot])
                for i in iter_set_bits(word):
                    tid, batch = chunk[i]
                    mask = bitpack.assignment_trigger(batch, lits)
                    if not mask:
                        continue
                    hits = bin(mask).count("1")
                    bucket.activities[slot] += self._activity_inc * hits
                    self.counters["lane_triggers"] += hits
                    if (engine_id, tid) not in reported:
                        reported.add((engine_id, tid))
                        reports.append(Report(tid, lits, engine_id, mask))
            negatives = bucket.count * n_groups - positives
            self.counters["aggregate_tests_negative"] += negatives
            result.aggregate_tests_negative += negatives

    def reduce_store(self) -> int:
        """Activity-based deletion of the least useful stored clauses.

        The lowest-activity share of the store (``1 - reduce_keep_fraction``)
        is removed; ties evict the older engine id first, and clauses added
        since the previous reduce are exempt so new arrivals get a chance
        to trigger before they are judged.
        """
        total = len(self.store)
        if total == 0:
            self._reduce_watermark = self._next_id
            return 0
        target = int(total * (1.0 - self.config.reduce_keep_fraction))
        candidates = []
        for size, bucket in self.store.buckets.items():
            ids = bucket.engine_ids[: bucket.count]
            acts = bucket.activities[: bucket.count]
            eligible = np.nonzero(ids < self._reduce_watermark)[0]
            for slot in eligible:
                candidates.append((float(acts[slot]), int(ids[slot]), size, int(slot)))
        candidates.sort()
        doomed = candidates[:target]
        removed = len(doomed)
        if removed:
            doomed_by_size: Dict[int, set] = {}
            for _, _, size, slot in doomed:
                doomed_by_size.setdefault(size, set()).add(slot)
            for size, slots in doomed_by_size.items():
                bucket = self.store.buckets[size]
                keep = np.ones(bucket.count, dtype=bool)
                keep[list(slots)] = False
                bucket.compact(keep)
        with self._id_lock:
            self._reduce_watermark = self._next_id
        self.counters["reduces"] += 1
        self.counters["clauses_removed"] += removed
        return removed

    def serve(self, stop: threading.Event, idle_sleep: float = 0.0005) -> None:
        """Worker loop: run rounds until asked to stop, napping when idle."""
        while not stop.is_set():
            result = self.run_round()
            if result.assignments_consumed == 0:
                time.sleep(idle_sleep)

    # ------------------------------------------------------------------

    def raw_counters(self) -> dict:
        """Copy of the round counters plus current store and queue sizes."""
        out = dict(self.counters)
        out["store_size"] = len(self.store)
        with self._id_lock:
            out["staged_pending"] = len(self._staged)
        with self._queue_lock:
            out["reports_pending"] = sum(len(q) for q in self._reports.values())
            out["snapshots_pending"] = sum(len(q) for q in self._snapshots.values())
        return out
