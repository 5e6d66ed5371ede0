"""Bit-parallel assignment batches and the trigger-test kernels.

A *lane* is one bit position of a machine word; a batch packs up to
``lane_width`` assignments so that a clause can be tested against all of
them with a handful of bitwise operations.  An aggregate batch goes one
level up: each bit position is a whole *group* of assignments collapsed to
the per-variable subset of values it takes, so a negative test on a group
rules out every lane inside it (the group-testing step; it admits false
positives, never false negatives).

All types here are immutable after construction and the kernels are pure
functions, so everything is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .core import FALSE, TRUE, UNDEF

#: Widest supported lane/group width: one machine word.
WORD_BITS = 64

_U64_ONE = np.uint64(1)


class CapacityError(ValueError):
    """More assignments or groups than the configured word width holds."""


def _check_width(width: int, what: str) -> None:
    if not 1 <= width <= WORD_BITS:
        raise ValueError(f"{what} must be in 1..{WORD_BITS}, got {width}")


@dataclass(frozen=True)
class PackedAssignmentBatch:
    """Up to ``lane_width`` assignments packed as per-variable bit words.

    For every variable ``v``, bit ``i`` of ``is_set[v]`` says whether lane
    ``i`` assigns ``v`` at all, and bit ``i`` of ``is_true[v]`` whether it
    assigns it True.  The encoding is canonical: an Undef lane has both
    bits clear, and bits at or above ``lane_count`` (pad lanes) are zero,
    so pad lanes look like all-Undef assignments and get masked out of
    every kernel result via ``lane_mask``.
    """

    num_vars: int
    lane_width: int
    lane_count: int
    lane_mask: int
    is_true: np.ndarray
    is_set: np.ndarray

    def literal_words(self, lit: int) -> tuple:
        """``(is_set, is_false)`` words for a literal.

        A positive literal is False on the lanes that set the variable to
        False; a negative literal on the lanes that set it to True.
        """
        v = lit if lit > 0 else -lit
        t = int(self.is_true[v])
        s = int(self.is_set[v])
        return s, (s & ~t) if lit > 0 else (s & t)

    def lane_assignment(self, lane: int) -> list:
        """Unpack one lane back into a plain assignment."""
        if not 0 <= lane < self.lane_count:
            raise IndexError(f"lane {lane} out of range (count {self.lane_count})")
        bit = _U64_ONE << np.uint64(lane)
        values = [UNDEF] * (self.num_vars + 1)
        for v in range(1, self.num_vars + 1):
            if self.is_set[v] & bit:
                values[v] = TRUE if self.is_true[v] & bit else FALSE
        return values


def pack_assignments(
    assignments: Sequence[Sequence[int]],
    num_vars: int,
    lane_width: int = 32,
) -> PackedAssignmentBatch:
    """Pack assignments (one per lane, in order) into a batch.

    Each assignment is indexed by variable with slot 0 ignored.  Undef
    entries are encoded canonically with the ``is_true`` bit forced clear.
    """
    _check_width(lane_width, "lane_width")
    if len(assignments) > lane_width:
        raise CapacityError(
            f"{len(assignments)} assignments exceed lane width {lane_width}"
        )
    is_true = np.zeros(num_vars + 1, dtype=np.uint64)
    is_set = np.zeros(num_vars + 1, dtype=np.uint64)
    for i, values in enumerate(assignments):
        vals = np.asarray(values, dtype=np.int8)
        if vals.shape[0] != num_vars + 1:
            raise ValueError(
                f"assignment {i} has {vals.shape[0]} slots, expected {num_vars + 1}"
            )
        shift = np.uint64(i)
        is_true |= (vals == TRUE).astype(np.uint64) << shift
        is_set |= (vals != UNDEF).astype(np.uint64) << shift
    is_true[0] = 0
    is_set[0] = 0
    lane_count = len(assignments)
    return PackedAssignmentBatch(
        num_vars=num_vars,
        lane_width=lane_width,
        lane_count=lane_count,
        lane_mask=(1 << lane_count) - 1,
        is_true=is_true,
        is_set=is_set,
    )


def assignment_trigger(batch: PackedAssignmentBatch, clause: Sequence[int]) -> int:
    """Bitmask of the lanes on which the clause triggers.

    Bit ``i`` is set when, under lane ``i``, no literal of the clause is
    True and at least ``size - 1`` literals are False (the clause is
    conflicting or unit).  Runs in one pass over the literals: ``all_false``
    tracks lanes where every literal so far is False, ``one_undef`` lanes
    where exactly one literal so far escaped through Undef.
    """
    all_false = (1 << batch.lane_width) - 1
    one_undef = 0
    for lit in clause:
        is_set, is_false = batch.literal_words(lit)
        one_undef = (all_false & ~is_set) | (one_undef & is_false)
        all_false &= is_false
    return (all_false | one_undef) & batch.lane_mask


@dataclass(frozen=True)
class AggregateAssignment:
    """Per-variable subset of the values a group of assignments takes.

    ``has_true[v]`` / ``has_false[v]`` / ``has_undef[v]`` say whether some
    lane of the group gives ``v`` that value.  At least one of the three
    holds for every variable; an empty group is represented as all-Undef.
    """

    num_vars: int
    has_true: np.ndarray
    has_false: np.ndarray
    has_undef: np.ndarray

    @classmethod
    def from_packed(cls, batch: PackedAssignmentBatch) -> "AggregateAssignment":
        """Collapse a packed batch into its aggregate, valid lanes only."""
        n = batch.num_vars
        if batch.lane_count == 0:
            has_true = np.zeros(n + 1, dtype=bool)
            has_false = np.zeros(n + 1, dtype=bool)
            has_undef = np.ones(n + 1, dtype=bool)
            has_undef[0] = False
            return cls(n, has_true, has_false, has_undef)
        mask = np.uint64(batch.lane_mask)
        has_true = batch.is_true != 0
        has_false = (batch.is_set & ~batch.is_true) != 0
        has_undef = (~batch.is_set & mask) != 0
        has_true[0] = has_false[0] = has_undef[0] = False
        return cls(n, has_true, has_false, has_undef)

    def values_at(self, v: int) -> frozenset:
        """The subset of truth values variable ``v`` takes in the group."""
        out = set()
        if self.has_true[v]:
            out.add(TRUE)
        if self.has_false[v]:
            out.add(FALSE)
        if self.has_undef[v]:
            out.add(UNDEF)
        return frozenset(out)


@dataclass(frozen=True)
class AggregateBatch:
    """Up to ``group_width`` aggregate assignments packed per variable.

    Bit ``i`` of ``can_be_true[v]`` records whether group ``i`` ever gives
    ``v`` the value True (and so on for False / Undef).  Bits at or above
    ``group_count`` are zero in all three words.
    """

    num_vars: int
    group_width: int
    group_count: int
    group_mask: int
    can_be_true: np.ndarray
    can_be_false: np.ndarray
    can_be_undef: np.ndarray

    def group_aggregate(self, i: int) -> AggregateAssignment:
        """Unpack one group back into an AggregateAssignment."""
        if not 0 <= i < self.group_count:
            raise IndexError(f"group {i} out of range (count {self.group_count})")
        bit = _U64_ONE << np.uint64(i)
        return AggregateAssignment(
            self.num_vars,
            (self.can_be_true & bit) != 0,
            (self.can_be_false & bit) != 0,
            (self.can_be_undef & bit) != 0,
        )


def build_aggregate_batch(
    batches: Sequence[PackedAssignmentBatch],
    group_width: int = 32,
) -> AggregateBatch:
    """Aggregate each packed batch into one group of an aggregate batch."""
    _check_width(group_width, "group_width")
    if len(batches) > group_width:
        raise CapacityError(f"{len(batches)} groups exceed group width {group_width}")
    if not batches:
        return AggregateBatch(0, group_width, 0, 0,
                              np.zeros(1, dtype=np.uint64),
                              np.zeros(1, dtype=np.uint64),
                              np.zeros(1, dtype=np.uint64))
    num_vars = batches[0].num_vars
    can_be_true = np.zeros(num_vars + 1, dtype=np.uint64)
    can_be_false = np.zeros(num_vars + 1, dtype=np.uint64)
    can_be_undef = np.zeros(num_vars + 1, dtype=np.uint64)
    for i, batch in enumerate(batches):
        if batch.num_vars != num_vars:
            raise ValueError("all batches must cover the same variable range")
        agg = AggregateAssignment.from_packed(batch)
        shift = np.uint64(i)
        can_be_true |= agg.has_true.astype(np.uint64) << shift
        can_be_false |= agg.has_false.astype(np.uint64) << shift
        can_be_undef |= agg.has_undef.astype(np.uint64) << shift
    return AggregateBatch(
        num_vars=num_vars,
        group_width=group_width,
        group_count=len(batches),
        group_mask=(1 << len(batches)) - 1,
        can_be_true=can_be_true,
        can_be_false=can_be_false,
        can_be_undef=can_be_undef,
    )


def aggregate_trigger(agg: AggregateBatch, clause: Sequence[int]) -> int:
    """Bitmask of the groups on whose aggregate the clause triggers.

    A clause triggers on an aggregate when every literal can be False or
    Undef within the group and at most one literal lacks False.  A clear
    bit proves the clause triggers on no lane of that group; a set bit only
    says it might (lanes must be rechecked individually).

    Reading a negative literal swaps the True and False words, since
    negating a value subset swaps its True and False members.
    """
    if agg.group_count == 0:
        return 0
    all_false = (1 << agg.group_width) - 1
    one_undef = 0
    for lit in clause:
        if lit > 0:
            cbf = int(agg.can_be_false[lit])
            cbu = int(agg.can_be_undef[lit])
        else:
            cbf = int(agg.can_be_true[-lit])
            cbu = int(agg.can_be_undef[-lit])
        one_undef = (all_false & cbu) | (one_undef & cbf)
        all_false &= cbf
    return (all_false | one_undef) & agg.group_mask


def iter_set_bits(word: int) -> Iterator[int]:
    """Indices of the set bits of a word, ascending."""
    while word:
        low = word & -word
        yield low.bit_length() - 1
        word ^= low


def multi_trigger(
    agg: AggregateBatch,
    per_group_batches: Sequence[PackedAssignmentBatch],
    clause: Sequence[int],
    report: Callable[[int, int], None],
) -> None:
    """Two-stage trigger test over many groups of assignments.

    Stage one tests the clause against every group's aggregate at once;
    stage two rechecks the individual lanes of the groups that tested
    positive.  ``report(group_index, lane_bitmask)`` is invoked exactly for
    the groups with at least one genuinely triggering lane, never with a
    zero mask.
    """
    word = aggregate_trigger(agg, clause)
    for i in iter_set_bits(word):
        mask = assignment_trigger(per_group_batches[i], clause)
        if mask:
            report(i, mask)
