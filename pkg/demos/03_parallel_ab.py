"""
Portfolio with and without clause exchange
==========================================

The same unsatisfiable pigeonhole instance is solved twice by a
two-thread portfolio: once as a pure portfolio (threads never talk) and
once with the exchange engine between them.  Both must agree on the
status; the engine run additionally shows how much clause traffic the
exchange moved.
"""

from triggersat.core import Formula
from triggersat.orchestrator import RunConfig, solve_parallel

# Seven pigeons, six holes: every pigeon gets a hole, no hole gets two.
def pigeonhole(pigeons, holes):
    var = lambda p, h: p * holes + h + 1
    clauses = [tuple(var(p, h) for h in range(holes))
               for p in range(pigeons)]
    for h in range(holes):
        for p1 in range(pigeons):
            for p2 in range(p1 + 1, pigeons):
                clauses.append((-var(p1, h), -var(p2, h)))
    return Formula(pigeons * holes, clauses)

formula = pigeonhole(7, 6)
print(f"pigeonhole(7,6): {formula.num_vars} variables, "
      f"{len(formula.clauses)} clauses\n")

silent = solve_parallel(
    formula, RunConfig(threads=2, seed=12, use_engine=False))
print(f"no engine:   {silent.status.value} in {silent.wall_time:.2f}s, "
      f"{sum(s['conflicts'] for s in silent.solver_stats)} conflicts")

shared = solve_parallel(formula, RunConfig(threads=2, seed=12))
print(f"with engine: {shared.status.value} in {shared.wall_time:.2f}s, "
      f"{sum(s['conflicts'] for s in shared.solver_stats)} conflicts")

assert silent.status == shared.status

counters = shared.engine_counters
stats = shared.engine_stats
print(f"\nexchange traffic: {counters['snapshots_consumed']} snapshots "
      f"tested, {counters['reports_delivered']} clause reports delivered")
imports = sum(s["imports_attached"] + s["imports_implied"]
              + s["imports_conflict"] for s in shared.solver_stats)
duplicates = sum(s["imports_duplicate"] for s in shared.solver_stats)
print(f"imports landed: {imports} (plus {duplicates} already known)")
if stats.negative_aggregate_ratio is not None:
    print(f"aggregate filter negativity: "
          f"{stats.negative_aggregate_ratio:.3f}")
