"""Logical primitives: truth values, literals, clauses, assignments.

Conventions used throughout the package:

* Variables are the integers ``1 .. num_vars``.
* A literal is a signed integer: ``+v`` for the variable itself, ``-v`` for
  its negation.  Negating a literal is unary minus.
* Truth values are the integers ``TRUE`` (1), ``FALSE`` (-1) and ``UNDEF``
  (0), so negating a value is also unary minus and Undef is a fixed point.
* An assignment is a sequence indexed by variable (slot 0 is unused) whose
  entries are truth values.  Variables not explicitly set are Undef.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

TRUE = 1
FALSE = -1
UNDEF = 0

VALUE_NAMES = {TRUE: "T", FALSE: "F", UNDEF: "U"}


def negate_value(w: int) -> int:
    """Negation of a truth value.  An involution; Undef maps to itself."""
    return -w


def lit_var(lit: int) -> int:
    """The variable of a literal."""
    return lit if lit > 0 else -lit


def eval_literal(assignment: Sequence[int], lit: int) -> int:
    """Value of a literal under an assignment.

    For a positive literal this is the variable's value, for a negative
    literal its negation.
    """
    if lit > 0:
        return assignment[lit]
    return -assignment[-lit]


class ClauseStatus(enum.Enum):
    SATISFIED = "satisfied"
    CONFLICTING = "conflicting"
    UNIT = "unit"
    UNRESOLVED = "unresolved"


def clause_status(assignment, clause):
    """Classify a clause under an assignment.

    Returns ``(status, unit_literal)`` where ``unit_literal`` is the single
    Undef literal when the status is UNIT and None otherwise.  The four
    statuses are mutually exclusive and exhaustive:

    * SATISFIED: some literal is True.
    * CONFLICTING: every literal is False (vacuously so for the empty
      clause, which callers treat as immediate unsatisfiability).
    * UNIT: exactly one literal is Undef and all others are False.
    * UNRESOLVED: otherwise.
    """
    undef_count = 0
    unit_lit = None
    for lit in clause:
        w = assignment[lit] if lit > 0 else -assignment[-lit]
        if w == TRUE:
            return ClauseStatus.SATISFIED, None
        if w == UNDEF:
            undef_count += 1
            unit_lit = lit
    if undef_count == 0:
        return ClauseStatus.CONFLICTING, None
    if undef_count == 1:
        return ClauseStatus.UNIT, unit_lit
    return ClauseStatus.UNRESOLVED, None


def triggers(assignment, clause) -> bool:
    """True when the clause is conflicting or unit under the assignment.

    Equivalently: no literal is True and at least ``size - 1`` literals are
    False.  This is the reference oracle every bit-parallel kernel in
    :mod:`triggersat.bitpack` is tested against.
    """
    status, _ = clause_status(assignment, clause)
    return status in (ClauseStatus.CONFLICTING, ClauseStatus.UNIT)


def normalize_clause(lits: Iterable[int]) -> Optional[tuple]:
    """Remove duplicate literals, preserving first-occurrence order.

    Returns None when the clause is a tautology (contains both ``v`` and
    ``-v``); tautologies can never be conflicting or unit, so callers must
    discard them rather than store them.
    """
    seen = set()
    out = []
    for lit in lits:
        if -lit in seen:
            return None
        if lit not in seen:
            seen.add(lit)
            out.append(lit)
    return tuple(out)


@dataclass
class Formula:
    """A conjunction of clauses over variables ``1 .. num_vars``."""

    num_vars: int
    clauses: list = field(default_factory=list)

    def validate(self) -> None:
        """Raise ValueError if any literal falls outside the variable range."""
        for clause in self.clauses:
            for lit in clause:
                v = lit if lit > 0 else -lit
                if not 1 <= v <= self.num_vars:
                    raise ValueError(
                        f"literal {lit} out of range for {self.num_vars} variables"
                    )

    def normalized(self) -> "Formula":
        """Copy with every clause normalized and tautologies dropped."""
        out = []
        for clause in self.clauses:
            norm = normalize_clause(clause)
            if norm is not None:
                out.append(norm)
        return Formula(self.num_vars, out)


def all_undef(num_vars: int) -> list:
    """A fresh assignment with every variable Undef."""
    return [UNDEF] * (num_vars + 1)


def assignment_from_dict(num_vars: int, mapping: dict) -> list:
    """Build an assignment from ``{variable: truth value}``; rest Undef."""
    values = [UNDEF] * (num_vars + 1)
    for var, w in mapping.items():
        values[var] = w
    return values
