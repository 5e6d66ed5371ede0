"""
Measuring when learned clauses actually get used
================================================

Two questions about a run, answered by the built-in recorders:

* once a clause is learned, how many conflicts pass before it is used
  again (in propagation, or as an antecedent in conflict analysis)?
* over a window of 32 conflicts, which of the values {True, False,
  Undef} does each variable actually take in the conflict parents?

Short reuse intervals justify testing recent snapshots only; small value
subsets are what make a group of snapshots aggregate well.
"""

from triggersat.core import Formula
from triggersat.orchestrator import RunConfig, solve_parallel

def pigeonhole(pigeons, holes):
    var = lambda p, h: p * holes + h + 1
    clauses = [tuple(var(p, h) for h in range(holes))
               for p in range(pigeons)]
    for h in range(holes):
        for p1 in range(pigeons):
            for p2 in range(p1 + 1, pigeons):
                clauses.append((-var(p1, h), -var(p2, h)))
    return Formula(pigeons * holes, clauses)

answer = solve_parallel(
    pigeonhole(7, 6),
    RunConfig(threads=2, seed=6, record_intervals=True,
              record_subsets=True))
print(f"status {answer.status.value}, "
      f"{sum(s['conflicts'] for s in answer.solver_stats)} conflicts\n")

# Reuse intervals, binned.  "inf" is a first use (no previous one).
print("clause reuse intervals (conflicts since the previous use)")
print(f"{'bin':>10} {'propagation':>12} {'analysis':>9}")
bins = answer.intervals.bins
for label in ("1", "2-10", "11-100", "101-1000", ">1000", "inf"):
    print(f"{label:>10} {bins['propagation'][label]:>12} "
          f"{bins['conflict-analysis'][label]:>9}")

for kind in ("propagation", "conflict-analysis"):
    cdf = answer.intervals.cdf(kind)
    within = {upper: frac for upper, frac in cdf}
    print(f"{kind}: {within[10]:.0%} of uses within 10 conflicts, "
          f"{within[100]:.0%} within 100")

# Value subsets per 32-conflict window.  A variable whose subset is {T}
# or {F} was effectively frozen for the whole window.
print("\nvalue subsets over 32-conflict windows "
      f"({answer.subsets.windows_completed} windows)")
for label, count, ratio in answer.subsets.ratios():
    bar = "#" * round(40 * ratio)
    print(f"{label:>9} {ratio:7.1%} {bar}")
