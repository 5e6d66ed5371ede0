"""
The bit-parallel trigger test, one word at a time
=================================================

A clause "triggers" on a partial assignment when it is worth looking at:
no literal is satisfied and at most one is still free, so the clause is
either conflicting or unit.  This walkthrough packs a handful of
assignments into machine words and evaluates one clause against all of
them with a few bitwise operations.
"""

from triggersat.bitpack import assignment_trigger, pack_assignments
from triggersat.core import FALSE, TRUE, all_undef, clause_status

# Five variables, four partial assignments.  Slot 0 of a values array is
# unused so that values[v] is variable v's value.
assignments = []
for partial in (
    {1: TRUE, 2: TRUE},                      # lane 0: 4 and 5 still free
    {1: TRUE, 2: TRUE, 4: TRUE},             # lane 1: only 5 free
    {1: TRUE, 2: FALSE, 4: TRUE, 5: FALSE},  # lane 2: 2 is False
    {2: TRUE, 4: TRUE, 5: TRUE},             # lane 3: 5 is True
):
    values = all_undef(5)
    for var, val in partial.items():
        values[var] = val
    assignments.append(values)

batch = pack_assignments(assignments, num_vars=5, lane_width=4)

# Lane i of the two words per variable encodes that assignment's value:
# is_set says the variable has a value, is_true says the value is True.
print("var  is_true  is_set   (lane 0 is the rightmost bit)")
for v in range(1, 6):
    print(f"  {v}   {batch.is_true[v]:04b}     {batch.is_set[v]:04b}")

# The clause here is (not-2 or not-4 or 5).  Per literal, "false in this
# lane" is one AND/ANDNOT away; the kernel folds those words into
# all_false ("every literal so far is false") and one_undef ("exactly one
# literal unset, the rest false").
clause = (-2, -4, 5)
print("\nclause", clause)

all_false = batch.lane_mask
one_undef = 0
for lit in clause:
    is_set, is_false = batch.literal_words(lit)
    print(f"  literal {lit:3}: false in lanes {is_false:04b}, "
          f"set in lanes {is_set:04b}")
    one_undef = (all_false & ~is_set) | (one_undef & is_false)
    all_false = all_false & is_false
trigger = (all_false | one_undef) & batch.lane_mask

print(f"\nconflicting lanes {all_false:04b}")
print(f"unit lanes        {one_undef & ~all_false:04b}")
print(f"trigger word      {trigger:04b}")

# The library kernel computes the same word.
assert trigger == assignment_trigger(batch, clause)

# Cross-check against the scalar status function, lane by lane.
for lane, values in enumerate(assignments):
    status, unit = clause_status(values, clause)
    bit = (trigger >> lane) & 1
    print(f"lane {lane}: {status.name:<11} -> trigger bit {bit}"
          + (f" (would imply {unit})" if unit else ""))

# Only lane 1 triggers: with 2 and 4 True the clause forces 5.  Lane 0
# still has two free literals, and lanes 2 and 3 satisfy the clause
# outright, so a solver in any of those states has no reason to look.
