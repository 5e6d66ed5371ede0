"""CDCL solver thread with engine-backed clause exchange.

Each :class:`Solver` is a self-contained conflict-driven search: watched
literals, first-UIP learning, VSIDS branching, phase saving, Luby
restarts and activity-based learned-clause deletion.  When attached to an
:class:`~triggersat.engine.Engine` it additionally exports every learned
clause, submits the parent assignment of each conflict, and imports the
clauses the engine reports as useful, at whatever search state it happens
to be in when the report arrives.
"""

from __future__ import annotations

import enum
import random
import threading
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import FALSE, TRUE, UNDEF, Formula, normalize_clause
from .engine import AssignmentSnapshot, Engine

_VAR_ACTIVITY_RESCALE = 1e100
_CLA_ACTIVITY_RESCALE = 1e100


def luby(i: int) -> int:
    """The i-th term (0-based) of the Luby restart sequence: 1 1 2 1 1 2 4..."""
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i = i % size
    return 1 << seq


class ImportOutcome(enum.Enum):
    """What happened when a reported clause was imported."""

    DUPLICATE_SKIPPED = "duplicate_skipped"
    ATTACHED = "attached"
    IMPLIED = "implied"
    CONFLICT = "conflict"
    UNSAT = "unsat"


@dataclass
class SolverParams:
    var_decay: float = 0.95
    clause_decay: float = 0.999
    restart_base: int = 64
    reduce_base: int = 2000
    reduce_inc: int = 300
    phase_default: bool = False
    seed: int = 0


class Clause:
    """A disjunction of literals; ``lits[0]`` and ``lits[1]`` are watched.

    For a clause that is the reason of an assignment, ``lits[0]`` is the
    implied literal.
    """

    __slots__ = ("lits", "learnt", "lbd", "activity", "cid")

    def __init__(self, lits: List[int], learnt: bool, lbd: int, cid: int):
        self.lits = lits
        self.learnt = learnt
        self.lbd = lbd
        self.activity = 0.0
        self.cid = cid

    def __repr__(self):
        return f"Clause({self.lits})"


class Solver:
    def __init__(self, num_vars: int, params: Optional[SolverParams] = None,
                 thread_id: int = 0):
        self.num_vars = num_vars
        self.params = params or SolverParams()
        self.thread_id = thread_id

        self.values = np.zeros(num_vars + 1, dtype=np.int8)
        self.level = np.zeros(num_vars + 1, dtype=np.int64)
        self.reason: List[Optional[Clause]] = [None] * (num_vars + 1)
        self.trail: List[int] = []
        self.trail_lim: List[int] = []
        self.qhead = 0

        # watches[(v << 1) | neg] lists the clauses watching that literal
        self.watches: List[List[Clause]] = [[] for _ in range(2 * (num_vars + 1))]
        self.clauses: List[Clause] = []
        self.learned: List[Clause] = []
        self.signatures: set = set()
        self.unsat_at_setup = False

        rng = random.Random(self.params.seed)
        self.var_activity = [0.0] * (num_vars + 1)
        for v in range(1, num_vars + 1):
            self.var_activity[v] = rng.random() * 1e-6
        self.var_inc = 1.0
        self.cla_inc = 1.0
        self.heap: List[Tuple[float, int]] = []
        for v in range(1, num_vars + 1):
            self.heap.append((-self.var_activity[v], v))
        import heapq
        heapq.heapify(self.heap)
        self._heapq = heapq

        self.saved_phase = bytearray(num_vars + 1)
        if self.params.phase_default:
            for v in range(num_vars + 1):
                self.saved_phase[v] = 1

        self.seen = bytearray(num_vars + 1)
        self._cid_counter = 0
        self.restarts = 0
        self.conflicts_since_restart = 0
        self.reduce_limit = self.params.reduce_base

        self.engine: Optional[Engine] = None
        self._snap_seq = 0
        self._parent_values = np.zeros(num_vars + 1, dtype=np.int8)
        self._last_parent: Optional[np.ndarray] = None

        self.interval_recorder = None
        self.subset_counter = None

        self.stats: Dict[str, int] = {
            "conflicts": 0,
            "decisions": 0,
            "propagations": 0,
            "restarts": 0,
            "learned": 0,
            "learned_deleted": 0,
            "reduces": 0,
            "exported": 0,
            "imports_attached": 0,
            "imports_implied": 0,
            "imports_conflict": 0,
            "imports_duplicate": 0,
            "imports_unsat": 0,
            "snapshots_submitted": 0,
            "snapshots_rejected": 0,
            "snapshots_deduped": 0,
            "reports_drained": 0,
        }

    # ------------------------------------------------------------------
    # setup

    @classmethod
    def from_formula(cls, formula: Formula,
                     params: Optional[SolverParams] = None,
                     thread_id: int = 0) -> "Solver":
        solver = cls(formula.num_vars, params, thread_id)
        for clause in formula.clauses:
            solver.add_clause(clause)
        return solver

    def add_clause(self, lits: Sequence[int]) -> bool:
        """Add an input clause at level 0; False means the formula is unsat."""
        if self.unsat_at_setup:
            return False
        norm = normalize_clause(lits)
        if norm is None:
            return True
        if len(norm) == 0:
            self.unsat_at_setup = True
            return False
        self.signatures.add(tuple(sorted(norm)))
        if len(norm) == 1:
            lit = norm[0]
            val = self.value(lit)
            if val == FALSE:
                self.unsat_at_setup = True
                return False
            if val == UNDEF:
                self._enqueue(lit, None)
            return True
        clause = self._new_clause(list(norm), learnt=False, lbd=len(norm))
        self.clauses.append(clause)
        self._attach(clause)
        return True

    def attach_engine(self, engine: Engine) -> None:
        self.engine = engine

    # ------------------------------------------------------------------
    # assignment primitives

    def value(self, lit: int) -> int:
        v = self.values[lit if lit > 0 else -lit]
        return int(v) if lit > 0 else -int(v)

    def level_of(self, var: int) -> int:
        return int(self.level[var])

    @property
    def current_level(self) -> int:
        return len(self.trail_lim)

    def _widx(self, lit: int) -> int:
        return (lit << 1) if lit > 0 else ((-lit) << 1) | 1

    def _new_clause(self, lits: List[int], learnt: bool, lbd: int) -> Clause:
        self._cid_counter += 1
        return Clause(lits, learnt, lbd, self._cid_counter)

    def _attach(self, clause: Clause) -> None:
        self.watches[self._widx(clause.lits[0])].append(clause)
        self.watches[self._widx(clause.lits[1])].append(clause)

    def _detach(self, clause: Clause) -> None:
        self.watches[self._widx(clause.lits[0])].remove(clause)
        self.watches[self._widx(clause.lits[1])].remove(clause)

    def _enqueue(self, lit: int, reason: Optional[Clause]) -> None:
        var = lit if lit > 0 else -lit
        self.values[var] = TRUE if lit > 0 else FALSE
        self.level[var] = self.current_level
        self.reason[var] = reason
        self.trail.append(lit)

    def assume(self, lit: int) -> None:
        """Open a new decision level and assign ``lit`` (test hook too)."""
        self.trail_lim.append(len(self.trail))
        self._enqueue(lit, None)

    def propagate(self) -> Optional[Clause]:
        """Unit propagation to fixpoint; returns a conflicting clause or None."""
        values = self.values
        while self.qhead < len(self.trail):
            p = self.trail[self.qhead]
            self.qhead += 1
            self.stats["propagations"] += 1
            false_lit = -p
            wl = self.watches[self._widx(false_lit)]
            i = j = 0
            while i < len(wl):
                c = wl[i]
                i += 1
                lits = c.lits
                if lits[0] == false_lit:
                    lits[0], lits[1] = lits[1], lits[0]
                first = lits[0]
                fv = values[first] if first > 0 else -values[-first]
                if fv == TRUE:
                    wl[j] = c
                    j += 1
                    continue
                for k in range(2, len(lits)):
                    lk = lits[k]
                    if (values[lk] if lk > 0 else -values[-lk]) != FALSE:
                        lits[1], lits[k] = lits[k], lits[1]
                        self.watches[self._widx(lits[1])].append(c)
                        break
                else:
                    wl[j] = c
                    j += 1
                    if fv == FALSE:
                        while i < len(wl):
                            wl[j] = wl[i]
                            j += 1
                            i += 1
                        del wl[j:]
                        return c
                    self._enqueue(first, c)
                    if self.interval_recorder is not None:
                        self.interval_recorder.record(
                            "propagation", c.cid, self.stats["conflicts"])
            del wl[j:]
        # the parent of any upcoming conflict: the last assignment where
        # propagation completed without one
        self._parent_values = self.values.copy()
        return None

    def backjump(self, target_level: int) -> None:
        if self.current_level <= target_level:
            return
        split = self.trail_lim[target_level]
        push = self._heapq.heappush
        for lit in reversed(self.trail[split:]):
            var = lit if lit > 0 else -lit
            self.saved_phase[var] = 1 if lit > 0 else 0
            self.values[var] = UNDEF
            self.reason[var] = None
            push(self.heap, (-self.var_activity[var], var))
        del self.trail[split:]
        del self.trail_lim[target_level:]
        self.qhead = len(self.trail)

    # ------------------------------------------------------------------
    # activities

    def _bump_var(self, var: int) -> None:
        self.var_activity[var] += self.var_inc
        if self.var_activity[var] > _VAR_ACTIVITY_RESCALE:
            for v in range(1, self.num_vars + 1):
                self.var_activity[v] *= 1e-100
            self.var_inc *= 1e-100
        if self.values[var] == UNDEF:
            self._heapq.heappush(self.heap, (-self.var_activity[var], var))

    def _bump_clause(self, clause: Clause) -> None:
        clause.activity += self.cla_inc
        if clause.activity > _CLA_ACTIVITY_RESCALE:
            for c in self.learned:
                c.activity *= 1e-100
            self.cla_inc *= 1e-100

    # ------------------------------------------------------------------
    # conflict analysis

    def analyze(self, conflict: Clause) -> Tuple[List[int], int, int]:
        """First-UIP learning.

        Returns ``(lits, backjump_level, lbd)`` with the asserting literal
        at ``lits[0]`` and the highest-remaining-level literal at
        ``lits[1]``.
        """
        seen = self.seen
        current = self.current_level
        counter = 0
        learned: List[int] = []
        to_clear: List[int] = []
        p = 0
        idx = len(self.trail) - 1
        c = conflict
        while True:
            if self.interval_recorder is not None:
                self.interval_recorder.record(
                    "conflict-analysis", c.cid, self.stats["conflicts"])
            if c.learnt:
                self._bump_clause(c)
            start = 1 if p != 0 else 0
            for lit in c.lits[start:]:
                var = lit if lit > 0 else -lit
                if not seen[var] and self.level[var] > 0:
                    seen[var] = 1
                    to_clear.append(var)
                    self._bump_var(var)
                    if self.level[var] >= current:
                        counter += 1
                    else:
                        learned.append(lit)
            while not seen[self.trail[idx] if self.trail[idx] > 0
                           else -self.trail[idx]]:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            pv = p if p > 0 else -p
            seen[pv] = 0
            counter -= 1
            if counter == 0:
                break
            c = self.reason[pv]
        lits = [-p] + learned
        for var in to_clear:
            seen[var] = 0
        if len(lits) == 1:
            bj_level = 0
        else:
            max_i = 1
            for i in range(2, len(lits)):
                li = lits[i]
                if self.level[li if li > 0 else -li] > \
                        self.level[lits[max_i] if lits[max_i] > 0 else -lits[max_i]]:
                    max_i = i
            lits[1], lits[max_i] = lits[max_i], lits[1]
            l1 = lits[1]
            bj_level = int(self.level[l1 if l1 > 0 else -l1])
        levels = {int(self.level[l if l > 0 else -l]) for l in lits}
        return lits, bj_level, len(levels)

    def _handle_conflict(self, conflict: Clause) -> bool:
        """Learn from a conflict; False means unsat was derived."""
        self.stats["conflicts"] += 1
        self.conflicts_since_restart += 1
        if self.subset_counter is not None:
            self.subset_counter.add(self._parent_values)
        self._submit_parent()
        if self.current_level == 0:
            return False
        lits, bj_level, lbd = self.analyze(conflict)
        self.backjump(bj_level)
        self.signatures.add(tuple(sorted(lits)))
        if len(lits) == 1:
            self._enqueue(lits[0], None)
        else:
            clause = self._new_clause(lits, learnt=True, lbd=lbd)
            self.learned.append(clause)
            self._attach(clause)
            self._bump_clause(clause)
            self._enqueue(lits[0], clause)
        self.stats["learned"] += 1
        if self.engine is not None:
            self.engine.add_clause(tuple(lits), origin=self.thread_id)
            self.stats["exported"] += 1
        self.var_inc /= self.params.var_decay
        self.cla_inc /= self.params.clause_decay
        return True

    # ------------------------------------------------------------------
    # exchange: parent snapshots out, reported clauses in

    def _submit_parent(self) -> None:
        """Send the conflict's parent: the last conflict-free fixpoint.

        Consecutive conflicts with no successful propagation in between
        share a parent, which is sent once.
        """
        if self.engine is None:
            return
        snapshot = self._parent_values
        if self._last_parent is not None and \
                np.array_equal(snapshot, self._last_parent):
            self.stats["snapshots_deduped"] += 1
            return
        self._last_parent = snapshot
        snap = AssignmentSnapshot(self.thread_id, snapshot, self._snap_seq)
        self._snap_seq += 1
        if self.engine.submit_assignment(snap):
            self.stats["snapshots_submitted"] += 1
        else:
            self.stats["snapshots_rejected"] += 1

    def drain_imports(self) -> Optional[ImportOutcome]:
        """Import everything the engine has reported to this thread.

        Returns ``ImportOutcome.UNSAT`` when an import proves the formula
        unsatisfiable, else None.  Implied literals are enqueued but not
        yet propagated; the caller runs propagation next.
        """
        if self.engine is None:
            return None
        reports = self.engine.drain_reports(self.thread_id)
        self.stats["reports_drained"] += len(reports)
        for report in reports:
            outcome = self.import_clause_anytime(report.lits)
            if outcome is ImportOutcome.UNSAT:
                return outcome
        return None

    def import_clause_anytime(self, lits: Sequence[int]) -> ImportOutcome:
        """Integrate a reported clause at the current search state.

        The clause triggered on a recent assignment, not necessarily the
        current one, so every relationship to the present trail must be
        handled: it may watch two non-false literals as-is, become unit
        after backtracking, or be conflicting and feed conflict analysis
        directly.
        """
        lits = list(lits)
        sig = tuple(sorted(lits))
        if sig in self.signatures:
            self.stats["imports_duplicate"] += 1
            return ImportOutcome.DUPLICATE_SKIPPED

        true_lits: List[int] = []
        undef_lits: List[int] = []
        false_lits: List[int] = []
        for lit in lits:
            v = self.value(lit)
            if v == TRUE:
                true_lits.append(lit)
            elif v == UNDEF:
                undef_lits.append(lit)
            else:
                false_lits.append(lit)
        false_lits.sort(key=lambda l: -self.level_of(l if l > 0 else -l))
        lam = self.level_of(abs(false_lits[0])) if false_lits else 0

        if len(true_lits) + len(undef_lits) >= 2:
            ordered = true_lits + undef_lits + false_lits
            self._import_attach(ordered, sig)
            self.stats["imports_attached"] += 1
            return ImportOutcome.ATTACHED

        if len(undef_lits) == 1 and not true_lits:
            u = undef_lits[0]
            self.backjump(lam)
            if len(lits) == 1:
                self._enqueue(u, None)
                self.signatures.add(sig)
            else:
                clause = self._import_attach([u] + false_lits, sig)
                self._enqueue(u, clause)
            self.stats["imports_implied"] += 1
            return ImportOutcome.IMPLIED

        if len(true_lits) == 1 and not undef_lits:
            t = true_lits[0]
            t_level = self.level_of(t if t > 0 else -t)
            if t_level > lam:
                self.backjump(lam)
                if len(lits) == 1:
                    self._enqueue(t, None)
                    self.signatures.add(sig)
                else:
                    clause = self._import_attach([t] + false_lits, sig)
                    self._enqueue(t, clause)
                self.stats["imports_implied"] += 1
                return ImportOutcome.IMPLIED
            if len(lits) == 1:
                self.signatures.add(sig)
            else:
                self._import_attach([t] + false_lits, sig)
            self.stats["imports_attached"] += 1
            return ImportOutcome.ATTACHED

        # every literal is false
        lam2 = self.level_of(abs(false_lits[1])) if len(false_lits) > 1 else 0
        if lam == 0:
            self.stats["imports_unsat"] += 1
            return ImportOutcome.UNSAT
        if lam > lam2:
            u = false_lits[0]
            self.backjump(lam2)
            if len(lits) == 1:
                self._enqueue(u, None)
                self.signatures.add(sig)
            else:
                clause = self._import_attach([u] + false_lits[1:], sig)
                self._enqueue(u, clause)
            self.stats["imports_implied"] += 1
            return ImportOutcome.IMPLIED
        self.backjump(lam)
        clause = self._import_attach(false_lits, sig)
        self.stats["imports_conflict"] += 1
        if not self._handle_conflict(clause):
            self.stats["imports_unsat"] += 1
            return ImportOutcome.UNSAT
        return ImportOutcome.CONFLICT

    def _import_attach(self, ordered: List[int], sig: tuple) -> Clause:
        clause = self._new_clause(ordered, learnt=True, lbd=len(ordered))
        self.learned.append(clause)
        self._attach(clause)
        self.signatures.add(sig)
        return clause

    # ------------------------------------------------------------------
    # learned-clause deletion

    def _locked(self, clause: Clause) -> bool:
        l0 = clause.lits[0]
        return self.reason[l0 if l0 > 0 else -l0] is clause

    def reduce_db(self) -> int:
        """Halve the deletable learned clauses, lowest activity first.

        Clauses with LBD at most 2 and clauses that are currently the
        reason of an assignment are kept.  Imported clauses are deletable
        like any other; dropping one only forgets the work it saved, and
        the engine will report it again if it turns out to matter.
        """
        cands = [c for c in self.learned if c.lbd > 2 and not self._locked(c)]
        cands.sort(key=lambda c: c.activity)
        doomed = cands[: len(cands) // 2]
        if not doomed:
            self.stats["reduces"] += 1
            return 0
        doomed_ids = {id(c) for c in doomed}
        for c in doomed:
            self._detach(c)
            self.signatures.discard(tuple(sorted(c.lits)))
        self.learned = [c for c in self.learned if id(c) not in doomed_ids]
        removed = len(doomed)
        self.stats["learned_deleted"] += removed
        self.stats["reduces"] += 1
        return removed

    # ------------------------------------------------------------------
    # top level

    def _pick_branch_var(self) -> Optional[int]:
        heap = self.heap
        pop = self._heapq.heappop
        while heap:
            _, var = pop(heap)
            if self.values[var] == UNDEF:
                return var
        for v in range(1, self.num_vars + 1):
            if self.values[v] == UNDEF:
                return v
        return None

    def _restart(self) -> None:
        self.restarts += 1
        self.stats["restarts"] += 1
        self.conflicts_since_restart = 0
        self.backjump(0)

    def solve(self, stop: Optional[threading.Event] = None,
              max_conflicts: Optional[int] = None) -> Optional[bool]:
        """Run the search; True = sat, False = unsat, None = interrupted."""
        if self.unsat_at_setup:
            return False
        restart_limit = luby(self.restarts) * self.params.restart_base
        while True:
            conflict = self.propagate()
            if conflict is not None:
                if not self._handle_conflict(conflict):
                    return False
                if max_conflicts is not None and \
                        self.stats["conflicts"] >= max_conflicts:
                    return None
                if self.conflicts_since_restart >= restart_limit:
                    self._restart()
                    restart_limit = luby(self.restarts) * self.params.restart_base
                continue
            if stop is not None and stop.is_set():
                return None
            if self.drain_imports() is ImportOutcome.UNSAT:
                return False
            if self.qhead < len(self.trail):
                continue
            if len(self.trail) == self.num_vars:
                return True
            if len(self.learned) >= self.reduce_limit:
                self.reduce_db()
                self.reduce_limit += self.params.reduce_inc
            var = self._pick_branch_var()
            if var is None:
                return True
            self.stats["decisions"] += 1
            self.assume(var if self.saved_phase[var] else -var)

    def model(self) -> List[int]:
        """Values indexed by variable (slot 0 unused); valid after sat."""
        return [int(v) for v in self.values]

    # ------------------------------------------------------------------
    # invariant sweeps (used by the tests, cheap enough to run anywhere)

    def debug_check_watches(self) -> None:
        """Every attached clause is watched exactly on lits[0] and lits[1],
        and a false watch implies the other watch is true from an equal or
        lower level."""
        watched: Dict[int, List[int]] = {}
        for widx, wl in enumerate(self.watches):
            for c in wl:
                watched.setdefault(id(c), []).append(widx)
        for c in self.clauses + self.learned:
            idxs = sorted(watched.get(id(c), []))
            expect = sorted([self._widx(c.lits[0]), self._widx(c.lits[1])])
            if idxs != expect:
                raise AssertionError(f"watch lists wrong for {c}: {idxs} != {expect}")
            if self.qhead == len(self.trail):
                for a, b in ((0, 1), (1, 0)):
                    la, lb = c.lits[a], c.lits[b]
                    if self.value(la) == FALSE:
                        va = la if la > 0 else -la
                        vb = lb if lb > 0 else -lb
                        if not (self.value(lb) == TRUE
                                and self.level[vb] <= self.level[va]):
                            raise AssertionError(
                                f"false watch without satisfying partner: {c}")

    def debug_check_reasons(self) -> None:
        """Each reason clause implies its literal: lits[0] is the assigned
        literal and every other literal is false at an equal or lower level."""
        for lit in self.trail:
            var = lit if lit > 0 else -lit
            c = self.reason[var]
            if c is None:
                continue
            if c.lits[0] != lit:
                raise AssertionError(f"reason of {lit} has lits[0]={c.lits[0]}")
            for other in c.lits[1:]:
                if self.value(other) != FALSE:
                    raise AssertionError(f"reason of {lit} not unit: {c}")
                ov = other if other > 0 else -other
                if self.level[ov] > self.level[var]:
                    raise AssertionError(f"reason of {lit} from the future: {c}")
