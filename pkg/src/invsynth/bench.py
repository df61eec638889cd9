"""Benchmark sweeps over a directory of problems, plus corpus transformations.

:func:`confound` pads a problem with variables that have nothing to do with
its safety, and :func:`mutate` perturbs a problem at random. Both are used to
stress variable selection and the soundness gate.
"""

from __future__ import annotations

import csv
import io
import logging
import random
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

from . import ir
from .frontend import ParseError, parse_problem
from .ir import VcProblem
from .oasis import SOLVED, OasisConfig, RunReport, oasis_solve

log = logging.getLogger(__name__)

PROBLEM_SUFFIXES = (".inv", ".sl", ".vc", ".sexp")
CSV_COLUMNS = ("file", "verdict", "time_ms", "vars", "relevant", "invariant_size")
ERROR = "Error"


@dataclass
class BenchRow:
    file: str
    verdict: str
    time_ms: int
    vars: int
    relevant: int
    invariant_size: int
    reason: str = ""


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)

    @property
    def solved(self) -> int:
        return sum(1 for r in self.rows if r.verdict == SOLVED)

    @property
    def total(self) -> int:
        return len(self.rows)

    def summary(self) -> str:
        return f"# solved: {self.solved}/{self.total}"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.file, r.verdict, r.time_ms, r.vars, r.relevant, r.invariant_size])
        buf.write(self.summary() + "\n")
        return buf.getvalue()


def problem_files(directory: str | Path) -> list[Path]:
    root = Path(directory)
    return sorted((p for p in root.iterdir() if p.is_file() and p.suffix in PROBLEM_SUFFIXES),
                  key=lambda p: p.name)


def run_benchmarks(directory: str | Path, config: OasisConfig | None = None, out: str | Path | None = None,
                   progress: Callable[[BenchRow], None] | None = None) -> BenchReport:
    """Solve every problem file in ``directory`` (by filename order); failures become rows."""
    config = config or OasisConfig()
    report = BenchReport()
    for path in problem_files(directory):
        t0 = time.monotonic()
        try:
            problem = parse_problem(path)
        except (ParseError, ir.IRError, UnicodeDecodeError) as e:
            row = BenchRow(path.name, ERROR, int((time.monotonic() - t0) * 1000), 0, 0, 0, str(e))
        else:
            try:
                rep = oasis_solve(problem, config)
                row = BenchRow(path.name, rep.verdict, rep.time_ms, len(problem.vars), rep.relevant_count,
                               rep.invariant_size, rep.reason)
            except Exception as e:  # noqa: BLE001 - one bad file must not stop the sweep
                log.exception("%s failed", path.name)
                row = BenchRow(path.name, ERROR, int((time.monotonic() - t0) * 1000), len(problem.vars), 0, 0,
                               f"{type(e).__name__}: {e}")
        report.rows.append(row)
        if progress is not None:
            progress(row)
    if out is not None:
        Path(out).write_text(report.to_csv())
    return report


def mask_timing(csv_text: str) -> str:
    """Blank the time column so two sweeps can be compared byte for byte."""
    rows = list(csv.reader(io.StringIO(csv_text)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    idx = CSV_COLUMNS.index("time_ms")
    for row in rows:
        if row and not row[0].startswith("#") and len(row) > idx and row[0] != "file":
            row[idx] = ""
        w.writerow(row)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# corpus transformations


def _fresh_names(taken: Iterable[str], count: int, stem: str = "z") -> list[str]:
    taken = set(taken)
    out, i = [], 0
    while len(out) < count:
        name = f"{stem}{i}"
        if name not in taken and ir.primed(name) not in taken:
            out.append(name)
        i += 1
    return out


def confound(problem: VcProblem, extra: int = 8, seed: int = 0) -> VcProblem:
    """Add ``extra`` variables that the transition updates but that never affect safety."""
    rng = random.Random(seed)
    names = _fresh_names(problem.vars, extra)
    pre_parts, trans_parts = [problem.pre], [problem.trans]
    for z in names:
        trans_parts.append(ir.Cmp("=", ir.Var(ir.primed(z)), ir.Add((ir.Var(z), ir.Const(rng.randint(-2, 2))))))
        if rng.random() < 0.5:
            pre_parts.append(ir.Cmp(">=", ir.Var(z), ir.Const(rng.randint(-3, 3))))
    return VcProblem(problem.vars + tuple(names), ir.conj(*pre_parts), ir.conj(*trans_parts), problem.post,
                     name=f"{problem.name}_confounded" if problem.name else "confounded")


_FLIP = {"<=": "<", "<": "<=", ">=": ">", ">": ">=", "=": ">=", "!=": "<"}


def _mutate_formula(f: ir.Formula, rng: random.Random, rate: float) -> ir.Formula:
    if isinstance(f, ir.Cmp):
        op, left, right = f.op, f.left, _mutate_term(f.right, rng, rate)
        if rng.random() < rate:
            op = _FLIP[op]
        return ir.Cmp(op, _mutate_term(left, rng, rate), right)
    if isinstance(f, ir.And):
        return ir.And(tuple(_mutate_formula(a, rng, rate) for a in f.args))
    if isinstance(f, ir.Or):
        return ir.Or(tuple(_mutate_formula(a, rng, rate) for a in f.args))
    if isinstance(f, ir.Not):
        return ir.Not(_mutate_formula(f.arg, rng, rate))
    if isinstance(f, ir.Implies):
        return ir.Implies(_mutate_formula(f.left, rng, rate), _mutate_formula(f.right, rng, rate))
    return f


def _mutate_term(t: ir.Term, rng: random.Random, rate: float) -> ir.Term:
    if isinstance(t, ir.Const):
        return ir.Const(t.value + rng.choice((-1, 1))) if rng.random() < rate else t
    if isinstance(t, (ir.Add, ir.Sub, ir.Mul)):
        return type(t)(tuple(_mutate_term(a, rng, rate) for a in t.args))
    if isinstance(t, ir.Neg):
        return ir.Neg(_mutate_term(t.arg, rng, rate))
    if isinstance(t, ir.Ite):
        return ir.Ite(_mutate_formula(t.cond, rng, rate), _mutate_term(t.then, rng, rate),
                      _mutate_term(t.other, rng, rate))
    return t


def mutate(problem: VcProblem, seed: int, rate: float = 0.25) -> VcProblem:
    """Perturb constants and comparison operators; the result may well be unsafe."""
    rng = random.Random(seed)
    return replace(problem,
                   pre=_mutate_formula(problem.pre, rng, rate),
                   trans=_mutate_formula(problem.trans, rng, rate),
                   post=_mutate_formula(problem.post, rng, rate),
                   name=f"{problem.name}_m{seed}")


def solved_count(reports: Iterable[RunReport]) -> int:
    return sum(1 for r in reports if r.solved)
