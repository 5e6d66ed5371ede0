"""
One clause-exchange round, traced
=================================

The engine owns every clause the solver threads have learned.  Threads
push in learned clauses and snapshots of their recent assignments; each
engine round drains the pending snapshots and tests the whole store
against them, first through a cheap aggregate filter over a group of
snapshots, then exactly on the snapshots of the groups that survive.
A report goes to a thread when a stored clause would have been unit or
conflicting on one of its snapshots.
"""

from triggersat.core import FALSE, TRUE, all_undef
from triggersat.engine import AssignmentSnapshot, Engine, EngineConfig

# Two solver threads over eight variables.
engine = Engine(num_vars=8, thread_count=2,
                config=EngineConfig(lane_width=4, group_width=4))

# Thread 0 learned two clauses; thread 1 learned one.
for lits, origin in (((-1, -2, 5), 0), ((3, 4), 0), ((-6, 7, 8), 1)):
    engine.add_clause(lits, origin=origin)
    print(f"thread {origin} exported {lits}")

# Each thread submits the parents of its recent conflicts: assignments
# where unit propagation had just finished without failing.
def snapshot(thread_id, seq, **vals):
    values = all_undef(8)
    for name, val in vals.items():
        values[int(name[1:])] = val
    return AssignmentSnapshot(thread_id, values, seq)

engine.submit_assignment(snapshot(0, 0, v1=TRUE, v2=TRUE))
engine.submit_assignment(snapshot(0, 1, v1=TRUE, v2=TRUE, v5=FALSE))
engine.submit_assignment(snapshot(1, 0, v3=FALSE, v6=TRUE, v7=FALSE))

# The round: integrate exports, drain snapshots, test, report.
result = engine.run_round()
print(f"\nround tested {result.clauses_tested} stored clauses against "
      f"{result.assignments_consumed} snapshots")
print(f"aggregate filter discarded {result.aggregate_tests_negative} "
      f"(clause, group) pairs without touching a single lane")

# (-1 -2 5) is unit on thread 0's first snapshot and conflicting on its
# second; on thread 1's snapshot both (-6 7 8) and (3 4) are unit.  Note
# (3 4) stays quiet toward thread 0, where it never triggered.
for tid in (0, 1):
    for rep in engine.drain_reports(tid):
        print(f"report to thread {tid}: clause {rep.lits} "
              f"triggered on lanes {rep.lane_mask:04b}")

counters = engine.raw_counters()
print(f"\nraw counters: {counters['lane_tests']} clause-lane tests, "
      f"{counters['lane_triggers']} lane triggers, "
      f"{counters['reports_delivered']} reports")
