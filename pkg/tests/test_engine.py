import threading
import time

import numpy as np
import pytest

from oracles import trigger_oracle
from triggersat.core import FALSE, TRUE, UNDEF, assignment_from_dict
from triggersat.engine import (
    AssignmentSnapshot,
    ClauseStore,
    Engine,
    EngineConfig,
    _SizeBucket,
)


def snap(thread_id, seq, num_vars, mapping):
    values = np.zeros(num_vars + 1, dtype=np.int8)
    for var, w in mapping.items():
        values[var] = w
    return AssignmentSnapshot(thread_id, values, seq)


# ----------------------------------------------------------------------
# storage layout

def test_bucket_insert_and_read_across_blocks():
    bucket = _SizeBucket(size=3, stride=4)
    clauses = [(i + 1, -(i + 2), i + 3) for i in range(23)]
    for i, lits in enumerate(clauses):
        bucket.insert(lits, engine_id=100 + i, origin=i % 3, activity=float(i))
    assert bucket.count == 23
    for i, lits in enumerate(clauses):
        assert bucket.lits_at(i) == lits
        assert bucket.engine_ids[i] == 100 + i
    cols = bucket.literal_columns()
    assert len(cols) == 3
    for j in range(3):
        assert [int(x) for x in cols[j]] == [c[j] for c in clauses]


def test_bucket_interleaved_layout_is_contiguous_per_position():
    # within a block, literal j of the block's clauses occupies one run
    bucket = _SizeBucket(size=2, stride=4)
    for i in range(4):
        bucket.insert((10 + i, -(20 + i)), engine_id=i, origin=0, activity=0.0)
    assert [int(x) for x in bucket.data[:8]] == [10, 11, 12, 13, -20, -21, -22, -23]


def test_bucket_compact_preserves_order():
    bucket = _SizeBucket(size=2, stride=4)
    for i in range(10):
        bucket.insert((i + 1, -(i + 1)), engine_id=i, origin=0, activity=float(i))
    keep = np.ones(10, dtype=bool)
    keep[[1, 4, 9]] = False
    bucket.compact(keep)
    assert bucket.count == 7
    kept_ids = [0, 2, 3, 5, 6, 7, 8]
    assert [int(x) for x in bucket.engine_ids[:7]] == kept_ids
    for slot, eid in enumerate(kept_ids):
        assert bucket.lits_at(slot) == (eid + 1, -(eid + 1))
        assert bucket.activities[slot] == float(eid)


def test_store_round_trips_mixed_sizes():
    store = ClauseStore(stride=32)
    clauses = [(1,), (1, 2), (-1, 2, -3), (1, 2, 3, 4, 5)]
    for i, lits in enumerate(clauses):
        store.insert(lits, engine_id=i, origin=0, activity=0.0)
    assert len(store) == 4
    seen = {eid: lits for eid, lits, _, _ in store.clauses()}
    assert seen == {i: lits for i, lits in enumerate(clauses)}


# ----------------------------------------------------------------------
# channels

def test_add_clause_assigns_unique_monotonic_ids():
    engine = Engine(4, 1)
    ids = [engine.add_clause((1, 2), origin=0) for _ in range(5)]
    assert ids == sorted(set(ids))
    assert len(engine.store) == 0  # staged until the next round
    engine.run_round()
    assert len(engine.store) == 5


def test_snapshot_queue_drops_newest_when_full():
    engine = Engine(2, 1, EngineConfig(assignment_queue_capacity=2))
    assert engine.submit_assignment(snap(0, 0, 2, {1: TRUE}))
    assert engine.submit_assignment(snap(0, 1, 2, {1: FALSE}))
    assert not engine.submit_assignment(snap(0, 2, 2, {2: TRUE}))
    assert engine.counters["snapshots_accepted"] == 2
    assert engine.counters["snapshots_dropped"] == 1
    result = engine.run_round()
    assert result.assignments_consumed == 2


def test_reports_route_to_their_thread_and_drain_fifo():
    engine = Engine(3, 2)
    engine.add_clause((1, 2), origin=0)
    engine.add_clause((3,), origin=0)
    # thread 1 falsifies both; thread 0 satisfies both
    engine.submit_assignment(snap(1, 0, 3, {1: FALSE, 2: FALSE, 3: FALSE}))
    engine.submit_assignment(snap(0, 0, 3, {1: TRUE, 3: TRUE}))
    engine.run_round()
    assert engine.drain_reports(0) == []
    reports = engine.drain_reports(1)
    assert sorted(r.lits for r in reports) == [(1, 2), (3,)]
    for r in reports:
        assert r.destination == 1
        assert r.lane_mask == 1
    assert engine.drain_reports(1) == []  # drained


# ----------------------------------------------------------------------
# rounds

def test_round_reports_only_triggering_clauses():
    engine = Engine(5, 1)
    engine.add_clause((1, 2), origin=0)   # conflicting below
    engine.add_clause((-3, 4), origin=0)  # unit below
    engine.add_clause((3, 5), origin=0)   # satisfied below
    engine.add_clause((4, 5), origin=0)   # two undefs below
    engine.submit_assignment(snap(0, 0, 5, {1: FALSE, 2: FALSE, 3: TRUE}))
    result = engine.run_round()
    reports = engine.drain_reports(0)
    assert sorted(r.lits for r in reports) == [(-3, 4), (1, 2)]
    assert result.reports_emitted == 2
    values = assignment_from_dict(5, {1: FALSE, 2: FALSE, 3: TRUE})
    for r in reports:
        assert trigger_oracle(values, r.lits)


def test_one_report_per_clause_and_thread_per_round():
    engine = Engine(2, 1, EngineConfig(lane_width=2,
                                       assignment_queue_capacity=8))
    engine.add_clause((1, 2), origin=0)
    for i in range(5):  # 3 batches at lane width 2
        engine.submit_assignment(snap(0, i, 2, {1: FALSE, 2: FALSE}))
    result = engine.run_round()
    reports = engine.drain_reports(0)
    assert len(reports) == 1
    assert result.reports_emitted == 1
    assert engine.counters["lane_triggers"] == 5  # every lane still bumps


def test_same_clause_reported_to_both_threads():
    engine = Engine(2, 2)
    engine.add_clause((1, 2), origin=0)
    engine.submit_assignment(snap(0, 0, 2, {1: FALSE, 2: FALSE}))
    engine.submit_assignment(snap(1, 0, 2, {1: FALSE, 2: FALSE}))
    engine.run_round()
    assert len(engine.drain_reports(0)) == 1
    assert len(engine.drain_reports(1)) == 1


def test_round_counters_reconcile_in_a_controlled_round():
    engine = Engine(3, 2)
    engine.add_clause((1, 2), origin=0)
    engine.add_clause((-3,), origin=1)
    engine.submit_assignment(snap(0, 0, 3, {1: TRUE}))
    engine.submit_assignment(snap(1, 0, 3, {3: TRUE}))
    engine.submit_assignment(snap(1, 1, 3, {3: FALSE}))
    result = engine.run_round()
    # two buckets, two groups (thread 0: 1 lane, thread 1: 2 lanes)
    assert engine.counters["aggregate_tests"] == 4
    assert engine.counters["lane_tests"] == 2 * 3
    assert result.assignments_consumed == 3
    # (-3,) triggers on thread 1 lane 0 (conflicting): one aggregate positive
    assert engine.counters["aggregate_tests_negative"] + \
        _count_aggregate_positives(engine) == engine.counters["aggregate_tests"]
    reports = engine.drain_reports(1)
    assert [r.lits for r in reports] == [(-3,)]
    assert reports[0].lane_mask == 0b01


def _count_aggregate_positives(engine):
    return engine.counters["aggregate_tests"] - \
        engine.counters["aggregate_tests_negative"]


def test_trigger_bumps_activity():
    engine = Engine(2, 1)
    engine.add_clause((1,), origin=0)
    engine.run_round()
    bucket = engine.store.buckets[1]
    before = float(bucket.activities[0])
    engine.submit_assignment(snap(0, 0, 2, {1: FALSE}))
    engine.run_round()
    assert float(bucket.activities[0]) > before


def test_empty_round_is_a_no_op():
    engine = Engine(2, 1)
    result = engine.run_round()
    assert result.assignments_consumed == 0
    assert result.reports_emitted == 0
    assert engine.counters["rounds"] == 1


# ----------------------------------------------------------------------
# deletion

def test_reduce_exempts_clauses_added_since_last_reduce():
    engine = Engine(4, 1, EngineConfig(reduce_keep_fraction=0.5))
    for i in range(4):
        engine.add_clause((1, i + 2), origin=0)
    engine.run_round()
    # first reduce: everything arrived since the initial watermark
    assert engine.reduce_store() == 0
    assert len(engine.store) == 4
    # second reduce: all four are now eligible; lowest activity, oldest first
    assert engine.reduce_store() == 2
    remaining = sorted(eid for eid, _, _, _ in engine.store.clauses())
    assert remaining == [2, 3]


def test_store_capacity_drops_when_reduce_cannot_help():
    engine = Engine(4, 1, EngineConfig(max_clauses=2))
    for i in range(3):
        engine.add_clause((1, i + 2), origin=0)
    engine.run_round()
    assert len(engine.store) == 2
    assert engine.counters["clauses_dropped"] == 1


def test_raw_counters_include_queue_backlogs():
    engine = Engine(2, 1)
    engine.add_clause((1,), origin=0)
    engine.submit_assignment(snap(0, 0, 2, {}))
    counters = engine.raw_counters()
    assert counters["staged_pending"] == 1
    assert counters["snapshots_pending"] == 1
    assert counters["reports_pending"] == 0


# ----------------------------------------------------------------------
# tracing and the worker loop

def test_trace_records_snapshots_store_and_reports():
    engine = Engine(2, 1, EngineConfig(trace=True))
    engine.add_clause((1, 2), origin=0)
    engine.submit_assignment(snap(0, 0, 2, {1: FALSE, 2: FALSE}))
    engine.run_round()
    assert len(engine.trace) == 1
    trace = engine.trace[0]
    assert trace.store == [(0, (1, 2))]
    assert len(trace.snapshots) == 1
    tid, values = trace.snapshots[0]
    assert tid == 0 and values[1] == FALSE
    assert len(trace.reports) == 1


def test_serve_loop_runs_until_stopped():
    engine = Engine(2, 1)
    engine.add_clause((1, 2), origin=0)
    stop = threading.Event()
    worker = threading.Thread(target=engine.serve, args=(stop,))
    worker.start()
    engine.submit_assignment(snap(0, 0, 2, {1: FALSE, 2: FALSE}))
    deadline = time.time() + 5.0
    reports = []
    while time.time() < deadline and not reports:
        reports = engine.drain_reports(0)
        time.sleep(0.005)
    stop.set()
    worker.join(timeout=5.0)
    assert not worker.is_alive()
    assert len(reports) == 1


def test_engine_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(max_clauses=0)
    with pytest.raises(ValueError):
        EngineConfig(activity_decay=0.0)
    with pytest.raises(ValueError):
        EngineConfig(reduce_keep_fraction=1.0)
    with pytest.raises(ValueError):
        EngineConfig(assignment_queue_capacity=0)
