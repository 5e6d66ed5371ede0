"""Measurement helpers: clause-use intervals, value subsets, engine stats.

Recording is opt-in; the recorders cost real time on the solver's hot
paths.  Each solver thread gets its own recorder and the results are
merged once the run is over, so nothing here needs a lock.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .core import FALSE, TRUE, UNDEF

#: (upper bound, label) per finite interval bin; first use goes to "inf".
INTERVAL_BINS = (
    (1, "1"),
    (10, "2-10"),
    (100, "11-100"),
    (1000, "101-1000"),
    (float("inf"), ">1000"),
)
INF_BIN = "inf"

USE_KINDS = ("propagation", "conflict-analysis")


def _bin_label(interval: int) -> str:
    for upper, label in INTERVAL_BINS:
        if interval <= upper:
            return label
    return INTERVAL_BINS[-1][1]


class ConflictIntervalRecorder:
    """Histogram of conflicts elapsed between reuses of each clause.

    Every use of a clause is recorded with the conflict count at that
    moment; the gap to the clause's previous use of the same kind is
    binned.  A first use has no previous one and counts as an infinite
    interval.  Set ``keep_raw`` to also keep the unbinned intervals.
    """

    def __init__(self, keep_raw: bool = False):
        self._last: Dict[str, Dict[int, int]] = {k: {} for k in USE_KINDS}
        self.bins: Dict[str, Dict[str, int]] = {
            k: {label: 0 for _, label in INTERVAL_BINS} | {INF_BIN: 0}
            for k in USE_KINDS
        }
        self.keep_raw = keep_raw
        self.raw: Dict[str, List[int]] = {k: [] for k in USE_KINDS}

    def record(self, kind: str, clause_key: int, conflict_count: int) -> None:
        last = self._last[kind]
        previous = last.get(clause_key)
        last[clause_key] = conflict_count
        if previous is None:
            self.bins[kind][INF_BIN] += 1
            return
        # reuse within the same conflict still lands in the closest bin
        interval = max(1, conflict_count - previous)
        self.bins[kind][_bin_label(interval)] += 1
        if self.keep_raw:
            self.raw[kind].append(interval)

    def total(self, kind: str) -> int:
        return sum(self.bins[kind].values())

    def cdf(self, kind: str) -> List[tuple]:
        """``(upper_bound, cumulative_fraction)`` over all uses of a kind.

        First uses sit in the denominator but never in a finite bin, so
        the curve approaches but does not reach 1 while they exist.
        """
        total = self.total(kind)
        out = []
        acc = 0
        for upper, label in INTERVAL_BINS:
            acc += self.bins[kind][label]
            out.append((upper, acc / total if total else 0.0))
        return out

    def merge(self, other: "ConflictIntervalRecorder") -> None:
        """Fold another thread's histogram into this one (bins only)."""
        for kind in USE_KINDS:
            for label, count in other.bins[kind].items():
                self.bins[kind][label] += count
            if self.keep_raw and other.keep_raw:
                self.raw[kind].extend(other.raw[kind])

    def table(self) -> dict:
        rows = []
        for kind in USE_KINDS:
            total = self.total(kind)
            acc = 0
            for upper, label in INTERVAL_BINS:
                count = self.bins[kind][label]
                acc += count
                rows.append({
                    "kind": kind,
                    "bin": label,
                    "count": count,
                    "cdf": acc / total if total else 0.0,
                })
            rows.append({
                "kind": kind,
                "bin": INF_BIN,
                "count": self.bins[kind][INF_BIN],
                "cdf": 1.0 if total else 0.0,
            })
        return {
            "table": "conflict-intervals",
            "bin_edges": [upper for upper, _ in INTERVAL_BINS[:-1]],
            "note": "bin edges are a fixed choice of this implementation",
            "rows": rows,
        }


#: Fixed table row order; bit encoding True=1, False=2, Undef=4.
SUBSET_ORDER = (
    (1, "{T}"),
    (2, "{F}"),
    (3, "{T,F}"),
    (4, "{U}"),
    (5, "{T,U}"),
    (6, "{F,U}"),
    (7, "{T,F,U}"),
)


class ValueSubsetCounter:
    """Per-variable value subsets over windows of 32 observations.

    Each :meth:`add` is one observed assignment (one per conflict).  When
    a window closes, every variable contributes one tally to the subset of
    values it took during the window.  A trailing partial window is
    discarded.
    """

    def __init__(self, num_vars: int, window: int = 32):
        self.num_vars = num_vars
        self.window = window
        self.counts = np.zeros(8, dtype=np.int64)
        self.windows_completed = 0
        self._in_window = 0
        self._has_true = np.zeros(num_vars + 1, dtype=bool)
        self._has_false = np.zeros(num_vars + 1, dtype=bool)
        self._has_undef = np.zeros(num_vars + 1, dtype=bool)

    def add(self, values: Sequence[int]) -> None:
        arr = np.asarray(values, dtype=np.int8)
        self._has_true |= arr == TRUE
        self._has_false |= arr == FALSE
        self._has_undef |= arr == UNDEF
        self._in_window += 1
        if self._in_window == self.window:
            self._close_window()

    def _close_window(self) -> None:
        code = (self._has_true.astype(np.int64)
                + 2 * self._has_false.astype(np.int64)
                + 4 * self._has_undef.astype(np.int64))
        self.counts += np.bincount(code[1:], minlength=8)
        self.windows_completed += 1
        self._in_window = 0
        self._has_true[:] = False
        self._has_false[:] = False
        self._has_undef[:] = False

    @property
    def total(self) -> int:
        return int(self.counts[1:].sum())

    def ratios(self) -> List[tuple]:
        """``(label, count, ratio)`` per subset, in the fixed row order."""
        total = self.total
        out = []
        for code, label in SUBSET_ORDER:
            count = int(self.counts[code])
            out.append((label, count, count / total if total else 0.0))
        return out

    def merge(self, other: "ValueSubsetCounter") -> None:
        self.counts += other.counts
        self.windows_completed += other.windows_completed

    def table(self) -> dict:
        return {
            "table": "value-subsets",
            "window": self.window,
            "windows_completed": self.windows_completed,
            "rows": [
                {"subset": label, "count": count, "ratio": ratio}
                for label, count, ratio in self.ratios()
            ],
        }


@dataclass
class EngineStats:
    """Derived engine statistics; None marks a zero denominator.

    ``zero_denominators`` lists which ratios were not computable.
    """

    clauses_tested_per_second: Optional[float]
    assignment_drop_ratio: Optional[float]
    negative_aggregate_ratio: Optional[float]
    imports_per_assignment: Optional[float]
    store_size: int
    zero_denominators: tuple = ()

    def as_dict(self) -> dict:
        return {
            "clauses_tested_per_second": self.clauses_tested_per_second,
            "assignment_drop_ratio": self.assignment_drop_ratio,
            "negative_aggregate_ratio": self.negative_aggregate_ratio,
            "imports_per_assignment": self.imports_per_assignment,
            "store_size": self.store_size,
            "zero_denominators": list(self.zero_denominators),
        }


def stats_summary(counters: dict) -> EngineStats:
    """Fold raw engine round counters into the derived statistics."""
    flags = []

    def ratio(num, den, name):
        if den <= 0:
            flags.append(name)
            return None
        return num / den

    negative = ratio(counters.get("aggregate_tests_negative", 0),
                     counters.get("aggregate_tests", 0),
                     "negative_aggregate_ratio")
    submitted = counters.get("snapshots_accepted", 0) + \
        counters.get("snapshots_dropped", 0)
    drop = ratio(counters.get("snapshots_dropped", 0), submitted,
                 "assignment_drop_ratio")
    imports = ratio(counters.get("reports_delivered", 0),
                    counters.get("snapshots_consumed", 0),
                    "imports_per_assignment")
    tested = ratio(counters.get("lane_tests", 0),
                   counters.get("busy_seconds", 0.0),
                   "clauses_tested_per_second")
    return EngineStats(
        clauses_tested_per_second=tested,
        assignment_drop_ratio=drop,
        negative_aggregate_ratio=negative,
        imports_per_assignment=imports,
        store_size=counters.get("store_size", 0),
        zero_denominators=tuple(flags),
    )


def write_stats_json(path: str, objects: Sequence[dict]) -> None:
    """One JSON object per line, one line per table or summary."""
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objects:
            fh.write(json.dumps(obj, sort_keys=True))
            fh.write("\n")


def write_histograms_csv(path: str, tables: Sequence[dict]) -> None:
    """Flatten exported tables into one CSV for external plotting."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["table", "kind", "bin", "count", "value"])
        for table in tables:
            name = table.get("table", "")
            for row in table.get("rows", []):
                if "subset" in row:
                    writer.writerow([name, "", row["subset"],
                                     row["count"], row["ratio"]])
                else:
                    writer.writerow([name, row.get("kind", ""), row["bin"],
                                     row["count"], row["cdf"]])
