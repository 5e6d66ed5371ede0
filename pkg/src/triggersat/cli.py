"""DIMACS front end with SAT-competition output conventions.

Exit codes: 10 satisfiable, 20 unsatisfiable, 0 unknown (includes
timeout), 1 usage or input error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, TextIO

from .core import TRUE, Formula
from .instrumentation import write_histograms_csv, write_stats_json
from .orchestrator import RunConfig, Status, solve_parallel


class DimacsError(ValueError):
    """Input rejected; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class DimacsDocument:
    """A parsed CNF file, before normalization."""

    num_vars: int
    declared_clauses: int
    clauses: List[tuple] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_formula(self) -> Formula:
        return Formula(self.num_vars, list(self.clauses)).normalized()


def parse_dimacs(lines: Iterable[str]) -> DimacsDocument:
    """Parse DIMACS CNF: ``c`` comments, one ``p cnf V C`` header, then
    0-terminated clauses.  The declared clause count is advisory (mismatch
    warns); everything else is an error with its line number.
    """
    doc: Optional[DimacsDocument] = None
    current: List[int] = []
    last_line = 0
    for lineno, raw in enumerate(lines, start=1):
        last_line = lineno
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if doc is not None:
                raise DimacsError(lineno, "duplicate header")
            parts = line.split()
            if len(parts) != 4 or parts[0] != "p" or parts[1] != "cnf":
                raise DimacsError(lineno, f"malformed header {line!r}")
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(lineno, f"malformed header {line!r}") from None
            if num_vars < 0 or num_clauses < 0:
                raise DimacsError(lineno, "negative counts in header")
            doc = DimacsDocument(num_vars, num_clauses)
            continue
        if doc is None:
            raise DimacsError(lineno, "clause data before the 'p cnf' header")
        for token in line.split():
            try:
                lit = int(token)
            except ValueError:
                raise DimacsError(
                    lineno, f"non-integer token {token!r}") from None
            if lit == 0:
                doc.clauses.append(tuple(current))
                current.clear()
            else:
                var = lit if lit > 0 else -lit
                if var > doc.num_vars:
                    raise DimacsError(
                        lineno,
                        f"literal {lit} out of range (header declares "
                        f"{doc.num_vars} variables)")
                current.append(lit)
    if doc is None:
        raise DimacsError(last_line or 1, "missing 'p cnf' header")
    if current:
        raise DimacsError(last_line, "unterminated final clause (missing 0)")
    if len(doc.clauses) != doc.declared_clauses:
        doc.warnings.append(
            f"header declares {doc.declared_clauses} clauses, "
            f"found {len(doc.clauses)}")
    return doc


def format_dimacs(formula: Formula) -> str:
    """Emit a formula as DIMACS CNF text (round-trips through the parser)."""
    out = [f"p cnf {formula.num_vars} {len(formula.clauses)}"]
    for clause in formula.clauses:
        out.append(" ".join(str(lit) for lit in clause) + " 0")
    return "\n".join(out) + "\n"


def _model_lines(model: Sequence[int], num_vars: int,
                 per_line: int = 20) -> List[str]:
    lits = []
    for v in range(1, num_vars + 1):
        lits.append(v if model[v] == TRUE else -v)
    lits.append(0)
    lines = []
    for i in range(0, len(lits), per_line):
        lines.append("v " + " ".join(str(x) for x in lits[i:i + per_line]))
    return lines


class _Parser(argparse.ArgumentParser):
    # exit code 1 (not argparse's 2) on flag errors, per the conventions
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    default_threads = max(1, (os.cpu_count() or 2) - 1)
    parser = _Parser(
        prog="triggersat",
        description="Parallel CDCL SAT solver with engine-tested clause "
                    "exchange.",
    )
    parser.add_argument("file", help="DIMACS CNF input, or '-' for stdin")
    parser.add_argument("--threads", type=int, default=default_threads,
                        metavar="K",
                        help="solver threads (default: cores minus the one "
                             "reserved for the engine worker)")
    parser.add_argument("--no-engine", action="store_true",
                        help="disable clause exchange (pure portfolio)")
    parser.add_argument("--lanes", type=int, default=32, metavar="N",
                        help="assignments packed per batch (1-64)")
    parser.add_argument("--groups", type=int, default=32, metavar="M",
                        help="assignment groups per aggregate batch (1-64)")
    parser.add_argument("--max-engine-clauses", type=int, default=5_000_000,
                        metavar="N", help="engine store capacity")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--timeout", type=float, default=None,
                        metavar="SECONDS",
                        help="give up and report unknown after this long")
    parser.add_argument("--stats-json", metavar="PATH",
                        help="write statistics (one JSON object per line)")
    parser.add_argument("--csv", metavar="PATH",
                        help="write recorded histograms as CSV")
    parser.add_argument("--record-intervals", action="store_true",
                        help="record clause-use conflict intervals")
    parser.add_argument("--record-subsets", action="store_true",
                        help="record 32-conflict value-subset windows")
    return parser


def _read_input(path: str) -> Iterable[str]:
    if path == "-":
        return sys.stdin
    return open(path, "r", encoding="utf-8")


def main(argv: Optional[Sequence[str]] = None,
         out: TextIO = None) -> int:
    out = out if out is not None else sys.stdout
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        stream = _read_input(args.file)
    except OSError as exc:
        print(f"triggersat: error: cannot read {args.file!r}: {exc}",
              file=sys.stderr)
        return 1
    try:
        doc = parse_dimacs(stream)
    except DimacsError as exc:
        print(f"triggersat: parse error: {exc}", file=sys.stderr)
        return 1
    finally:
        if stream is not sys.stdin:
            stream.close()
    for warning in doc.warnings:
        print(f"c warning: {warning}", file=sys.stderr)

    formula = doc.to_formula()
    try:
        config = RunConfig(
            threads=args.threads,
            use_engine=not args.no_engine,
            lane_width=args.lanes,
            group_width=args.groups,
            max_engine_clauses=args.max_engine_clauses,
            seed=args.seed,
            timeout=args.timeout,
            record_intervals=args.record_intervals,
            record_subsets=args.record_subsets,
        )
    except ValueError as exc:
        print(f"triggersat: error: {exc}", file=sys.stderr)
        return 1

    answer = solve_parallel(formula, config)

    print(f"c wall time {answer.wall_time:.3f}s, "
          f"conflicts {sum(s['conflicts'] for s in answer.solver_stats)}",
          file=out)
    if answer.status is Status.SATISFIABLE:
        print("s SATISFIABLE", file=out)
        for line in _model_lines(answer.model, formula.num_vars):
            print(line, file=out)
        code = 10
    elif answer.status is Status.UNSATISFIABLE:
        print("s UNSATISFIABLE", file=out)
        code = 20
    else:
        print("s UNKNOWN", file=out)
        code = 0

    if args.stats_json:
        objects = [_summary_object(answer)]
        if answer.intervals is not None:
            objects.append(answer.intervals.table())
        if answer.subsets is not None:
            objects.append(answer.subsets.table())
        write_stats_json(args.stats_json, objects)
    if args.csv:
        tables = []
        if answer.intervals is not None:
            tables.append(answer.intervals.table())
        if answer.subsets is not None:
            tables.append(answer.subsets.table())
        write_histograms_csv(args.csv, tables)
    return code


def _summary_object(answer) -> dict:
    obj = {
        "table": "run-summary",
        "status": answer.status.value,
        "wall_time": answer.wall_time,
        "winner": answer.winner,
        "solver_stats": answer.solver_stats,
    }
    if answer.engine_counters is not None:
        obj["engine_counters"] = answer.engine_counters
        obj["engine_stats"] = answer.engine_stats.as_dict()
    return obj
