"""Small exact mixed-integer linear programming.

Models are built with :class:`IlpModel` and solved by :func:`solve`, a
depth-first branch-and-bound. Bound propagation and the acceptance of every
solution use exact rational arithmetic. A floating-point LP relaxation (HiGHS,
through scipy) is only consulted to prune nodes and to pick branching
variables. It never decides what is returned. When every integer variable is
fixed, the remaining continuous part is solved by an exact rational simplex
(:func:`exact_lp`).

Integer variables must have finite bounds, so the search is exhaustive and the
optimum it reports is a true optimum.
"""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

INTEGER = "integer"
CONTINUOUS = "continuous"
RELATIONS = ("<=", ">=", "=")

Number = Union[int, Fraction]

INT_TOL = 1e-6


class IlpModelError(Exception):
    """The model is malformed or its relaxation is unbounded."""


def _frac(x) -> Fraction:
    if isinstance(x, float):
        if not math.isfinite(x):
            raise IlpModelError(f"non-finite coefficient {x}")
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


@dataclass(frozen=True)
class IlpVar:
    name: str
    kind: str
    lb: Fraction | None
    ub: Fraction | None


@dataclass(frozen=True)
class LinearConstraint:
    coeffs: tuple[tuple[str, Fraction], ...]
    rel: str
    rhs: Fraction
    name: str = ""


class IlpModel:
    """Bounded integer and continuous variables, linear rows, optional objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.vars: list[IlpVar] = []
        self.index: dict[str, int] = {}
        self.constraints: list[LinearConstraint] = []
        self.objective: tuple[tuple[str, Fraction], ...] | None = None

    def add_var(self, name: str, kind: str = INTEGER, lb: Number | None = 0, ub: Number | None = None) -> str:
        if name in self.index:
            raise IlpModelError(f"duplicate variable {name!r}")
        if kind not in (INTEGER, CONTINUOUS):
            raise IlpModelError(f"unknown variable kind {kind!r}")
        lb = None if lb is None else _frac(lb)
        ub = None if ub is None else _frac(ub)
        if kind == INTEGER and (lb is None or ub is None):
            raise IlpModelError(f"integer variable {name!r} needs finite bounds")
        self.index[name] = len(self.vars)
        self.vars.append(IlpVar(name, kind, lb, ub))
        return name

    def add_binary(self, name: str) -> str:
        return self.add_var(name, INTEGER, 0, 1)

    def _terms(self, coeffs: Mapping[str, Number] | Iterable[tuple[str, Number]]):
        pairs = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[str, Fraction] = {}
        for k, c in pairs:
            if k not in self.index:
                raise IlpModelError(f"undeclared variable {k!r}")
            acc[k] = acc.get(k, Fraction(0)) + _frac(c)
        return tuple((k, c) for k, c in acc.items() if c != 0)

    def add_constraint(self, coeffs, rel: str, rhs: Number, name: str = "") -> None:
        if rel not in RELATIONS:
            raise IlpModelError(f"unknown relation {rel!r}")
        self.constraints.append(LinearConstraint(self._terms(coeffs), rel, _frac(rhs),
                                                 name or f"c{len(self.constraints)}"))

    def set_objective(self, coeffs) -> None:
        self.objective = self._terms(coeffs)

    @property
    def integer_vars(self) -> list[str]:
        return [v.name for v in self.vars if v.kind == INTEGER]

    def stats(self) -> dict:
        return {"vars": len(self.vars), "integer": len(self.integer_vars), "constraints": len(self.constraints)}


# ---------------------------------------------------------------------------
# outcomes

@dataclass(frozen=True)
class SolveStats:
    nodes: int = 0
    lp_calls: int = 0
    seconds: float = 0.0


@dataclass(frozen=True)
class Optimal:
    assignment: dict
    objective: Fraction
    stats: SolveStats = field(default=SolveStats(), compare=False)


@dataclass(frozen=True)
class Feasible:
    assignment: dict
    stats: SolveStats = field(default=SolveStats(), compare=False)


@dataclass(frozen=True)
class Infeasible:
    stats: SolveStats = field(default=SolveStats(), compare=False)


@dataclass(frozen=True)
class ResourceLimit:
    reason: str
    incumbent: dict | None = None
    stats: SolveStats = field(default=SolveStats(), compare=False)


IlpOutcome = Union[Optimal, Feasible, Infeasible, ResourceLimit]


def check_assignment(model: IlpModel, assignment: Mapping[str, Number]) -> bool:
    """Exact check of bounds, integrality and every constraint."""
    for v in model.vars:
        if v.name not in assignment:
            return False
        x = Fraction(assignment[v.name])
        if v.kind == INTEGER and x.denominator != 1:
            return False
        if (v.lb is not None and x < v.lb) or (v.ub is not None and x > v.ub):
            return False
    for c in model.constraints:
        lhs = sum((coef * Fraction(assignment[k]) for k, coef in c.coeffs), Fraction(0))
        if c.rel == "<=" and lhs > c.rhs or c.rel == ">=" and lhs < c.rhs or c.rel == "=" and lhs != c.rhs:
            return False
    return True


def objective_value(model: IlpModel, assignment: Mapping[str, Number]) -> Fraction:
    if model.objective is None:
        return Fraction(0)
    return sum((c * Fraction(assignment[k]) for k, c in model.objective), Fraction(0))


# ---------------------------------------------------------------------------
# exact simplex

def exact_lp(c: Sequence[Fraction], rows: Sequence[tuple[Sequence[Fraction], str, Fraction]],
             lb: Sequence[Fraction | None], ub: Sequence[Fraction | None]):
    """Minimise ``c.x`` over rows and box bounds with exact rational arithmetic.

    Returns ``("optimal", x, value)``, ``("infeasible", None, None)`` or
    ``("unbounded", None, None)``. Dense two-phase tableau with Bland's rule.
    """
    n = len(c)
    # x_j = shift_j + sign_j * x'_j  (or x+ - x- for free columns)
    cols: list[list[tuple[int, int]]] = []  # per original var: list of (std col, sign)
    shift: list[Fraction] = []
    extra_rows = []
    m_std = 0
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if lo is not None:
            cols.append([(m_std, 1)])
            shift.append(Fraction(lo))
            if hi is not None:
                extra_rows.append(({m_std: Fraction(1)}, "<=", Fraction(hi) - Fraction(lo)))
            m_std += 1
        elif hi is not None:
            cols.append([(m_std, -1)])
            shift.append(Fraction(hi))
            m_std += 1
        else:
            cols.append([(m_std, 1), (m_std + 1, -1)])
            shift.append(Fraction(0))
            m_std += 2
    std_rows: list[tuple[dict[int, Fraction], str, Fraction]] = []
    for coeffs, rel, rhs in rows:
        row: dict[int, Fraction] = {}
        r = Fraction(rhs)
        for j, a in enumerate(coeffs):
            a = Fraction(a)
            if a == 0:
                continue
            r -= a * shift[j]
            for col, s in cols[j]:
                row[col] = row.get(col, Fraction(0)) + a * s
        std_rows.append((row, rel, r))
    std_rows.extend(extra_rows)
    cost = [Fraction(0)] * m_std
    const = Fraction(0)
    for j in range(n):
        cj = Fraction(c[j])
        const += cj * shift[j]
        for col, s in cols[j]:
            cost[col] += cj * s

    # equality form with slacks, rhs >= 0, one artificial per row
    m = len(std_rows)
    n_slack = sum(1 for _, rel, _ in std_rows if rel != "=")
    width = m_std + n_slack + m
    tab = []
    basis = []
    slack = m_std
    for i, (row, rel, r) in enumerate(std_rows):
        t = [Fraction(0)] * (width + 1)
        for col, a in row.items():
            t[col] = a
        if rel == "<=":
            t[slack] = Fraction(1)
            slack += 1
        elif rel == ">=":
            t[slack] = Fraction(-1)
            slack += 1
        t[width] = r
        if r < 0:
            t = [-a for a in t]
        t[m_std + n_slack + i] = Fraction(1)
        tab.append(t)
        basis.append(m_std + n_slack + i)

    def pivot(pr: int, pc: int) -> None:
        p = tab[pr][pc]
        tab[pr] = [a / p for a in tab[pr]]
        for i in range(m):
            if i != pr and tab[i][pc] != 0:
                f = tab[i][pc]
                tab[i] = [a - f * b for a, b in zip(tab[i], tab[pr])]
        basis[pr] = pc

    def run(obj: list[Fraction], allowed: int) -> bool:
        """Simplex on the current tableau; False when unbounded."""
        while True:
            # reduced costs
            red = list(obj[:allowed])
            for i, bv in enumerate(basis):
                cb = obj[bv]
                if cb != 0:
                    for j in range(allowed):
                        if tab[i][j] != 0:
                            red[j] -= cb * tab[i][j]
            enter = next((j for j in range(allowed) if red[j] < 0 and j not in basis), None)
            if enter is None:
                return True
            best = None
            for i in range(m):
                a = tab[i][enter]
                if a > 0:
                    ratio = tab[i][width] / a
                    if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                return False
            pivot(best[1], enter)

    phase1 = [Fraction(0)] * (m_std + n_slack) + [Fraction(1)] * m
    run(phase1, width)
    if sum((tab[i][width] for i in range(m) if basis[i] >= m_std + n_slack), Fraction(0)) > 0:
        return "infeasible", None, None
    # drive remaining artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= m_std + n_slack:
            pc = next((j for j in range(m_std + n_slack) if tab[i][j] != 0), None)
            if pc is not None:
                pivot(i, pc)
    keep = [i for i in range(m) if basis[i] < m_std + n_slack]
    tab[:] = [tab[i] for i in keep]
    basis[:] = [basis[i] for i in keep]
    m = len(tab)
    phase2 = cost + [Fraction(0)] * (n_slack + len(std_rows))
    if not run(phase2, m_std + n_slack):
        return "unbounded", None, None
    xs = [Fraction(0)] * (m_std + n_slack)
    for i, bv in enumerate(basis):
        xs[bv] = tab[i][width]
    x = []
    for j in range(n):
        x.append(shift[j] + sum((s * xs[col] for col, s in cols[j]), Fraction(0)))
    value = const + sum((cost[k] * xs[k] for k in range(m_std)), Fraction(0))
    return "optimal", x, value


# ---------------------------------------------------------------------------
# branch and bound

class _Compiled:
    """Rows scaled to integer coefficients, all in ``sum <= rhs`` form."""

    def __init__(self, model: IlpModel):
        self.model = model
        self.n = len(model.vars)
        self.is_int = [v.kind == INTEGER for v in model.vars]
        self.rows: list[tuple[list[int], list[int], int]] = []
        for con in model.constraints:
            idx = [model.index[k] for k, _ in con.coeffs]
            scale = math.lcm(*(c.denominator for _, c in con.coeffs), con.rhs.denominator)
            coef = [int(c * scale) for _, c in con.coeffs]
            rhs = int(con.rhs * scale)
            if con.rel in ("<=", "="):
                self.rows.append((idx, coef, rhs))
            if con.rel in (">=", "="):
                self.rows.append((idx, [-a for a in coef], -rhs))
        self.var_rows: list[list[int]] = [[] for _ in range(self.n)]
        for r, (idx, _, _) in enumerate(self.rows):
            for j in idx:
                self.var_rows[j].append(r)
        self.obj = [Fraction(0)] * self.n
        if model.objective is not None:
            for k, c in model.objective:
                self.obj[model.index[k]] = c
        # objective values of integer-only objectives live on a lattice
        obj_vars = [j for j in range(self.n) if self.obj[j] != 0]
        self.obj_step: Fraction | None = None
        if all(self.is_int[j] for j in obj_vars):
            den = math.lcm(*(self.obj[j].denominator for j in obj_vars)) if obj_vars else 1
            self.obj_step = Fraction(1, den)
        # float data for the relaxation
        data, ri, ci = [], [], []
        for r, (idx, coef, _) in enumerate(self.rows):
            for j, a in zip(idx, coef):
                data.append(float(a))
                ri.append(r)
                ci.append(j)
        self.A = csr_matrix((data, (ri, ci)), shape=(len(self.rows), self.n)) if self.rows else None
        self.b = np.array([float(r[2]) for r in self.rows])
        self.c = np.array([float(x) for x in self.obj])


def _row_bounds(row, lb, ub):
    """Finite part of the minimal activity and the index of infinite terms."""
    idx, coef, _ = row
    total = 0
    inf = []
    for j, a in zip(idx, coef):
        bnd = lb[j] if a > 0 else ub[j]
        if bnd is None:
            inf.append(j)
        else:
            total += a * bnd
    return total, inf


def _propagate(comp: _Compiled, lb: list, ub: list, cutoff_row=None, budget: int | None = None) -> bool:
    """Tighten bounds in place; False when a row becomes infeasible."""
    rows = comp.rows if cutoff_row is None else comp.rows + [cutoff_row]
    nrows = len(rows)
    var_rows = comp.var_rows
    cutoff_id = len(comp.rows)
    queue = list(range(nrows))
    queued = [True] * nrows
    visits = 0
    budget = budget if budget is not None else 20 * nrows + 1000
    while queue:
        r = queue.pop()
        queued[r] = False
        visits += 1
        if visits > budget:
            return True
        idx, coef, rhs = rows[r]
        minact, inf = _row_bounds(rows[r], lb, ub)
        if not inf and minact > rhs:
            return False
        if len(inf) > 1:
            continue
        for j, a in zip(idx, coef):
            if inf and inf[0] != j:
                continue
            own = lb[j] if a > 0 else ub[j]
            rest = minact - (a * own if own is not None else 0)
            slack = rhs - rest
            exact = isinstance(slack, int)
            if a > 0:
                if exact and comp.is_int[j]:
                    new = slack // a
                else:
                    new = Fraction(slack, a) if exact else slack / a
                    if comp.is_int[j]:
                        new = math.floor(new)
                if ub[j] is None or new < ub[j]:
                    if lb[j] is not None and new < lb[j]:
                        return False
                    ub[j] = new
                else:
                    continue
            else:
                if exact and comp.is_int[j]:
                    new = -(-slack // a)
                else:
                    new = Fraction(slack, a) if exact else slack / a
                    if comp.is_int[j]:
                        new = math.ceil(new)
                if lb[j] is None or new > lb[j]:
                    if ub[j] is not None and new > ub[j]:
                        return False
                    lb[j] = new
                else:
                    continue
            for r2 in var_rows[j]:
                if not queued[r2]:
                    queued[r2] = True
                    queue.append(r2)
            if cutoff_row is not None and comp.obj[j] != 0 and not queued[cutoff_id]:
                queued[cutoff_id] = True
                queue.append(cutoff_id)
    return True


def _relax(comp: _Compiled, lb, ub):
    """Float LP relaxation: ('infeasible'|'unbounded'|'optimal'|'error', x, value)."""
    bounds = [(None if l is None else float(l), None if u is None else float(u)) for l, u in zip(lb, ub)]
    try:
        if comp.A is None:
            res = linprog(comp.c, bounds=bounds, method="highs")
        else:
            res = linprog(comp.c, A_ub=comp.A, b_ub=comp.b, bounds=bounds, method="highs")
    except ValueError:
        return "error", None, None
    if res.status == 0:
        return "optimal", res.x, float(res.fun)
    if res.status == 2:
        return "infeasible", None, None
    if res.status == 3:
        return "unbounded", None, None
    return "error", None, None


def _complete_leaf(comp: _Compiled, lb, ub):
    """All integers fixed: exact LP over the continuous rest. Returns (x, value) or None."""
    model = comp.model
    cont = [j for j in range(comp.n) if not comp.is_int[j]]
    fixed = {j: lb[j] for j in range(comp.n) if comp.is_int[j]}
    if not cont:
        x = [fixed[j] for j in range(comp.n)]
        for idx, coef, rhs in comp.rows:
            if sum(a * x[j] for j, a in zip(idx, coef)) > rhs:
                return None
        return x, sum((comp.obj[j] * x[j] for j in range(comp.n)), Fraction(0))
    pos = {j: k for k, j in enumerate(cont)}
    rows = []
    for idx, coef, rhs in comp.rows:
        r = [Fraction(0)] * len(cont)
        rr = Fraction(rhs)
        for j, a in zip(idx, coef):
            if j in pos:
                r[pos[j]] += a
            else:
                rr -= a * fixed[j]
        rows.append((r, "<=", rr))
    status, xc, _ = exact_lp([comp.obj[j] for j in cont], rows, [lb[j] for j in cont], [ub[j] for j in cont])
    if status == "unbounded":
        if model.objective is not None:
            raise IlpModelError("continuous relaxation is unbounded")
        status, xc, _ = exact_lp([Fraction(0)] * len(cont), rows, [lb[j] for j in cont], [ub[j] for j in cont])
    if status != "optimal":
        return None
    x = [fixed[j] if comp.is_int[j] else xc[pos[j]] for j in range(comp.n)]
    return x, sum((comp.obj[j] * x[j] for j in range(comp.n)), Fraction(0))


def solve(model: IlpModel, node_limit: int | None = 200_000, time_limit: float | None = None,
          priorities: Mapping[str, int] | None = None, use_relaxation: bool = True) -> IlpOutcome:
    """Branch-and-bound. Without an objective the first integral point is returned.

    ``priorities`` optionally ranks variables for branching (higher first);
    within a rank the most fractional relaxation value wins, ties by
    declaration order, and the floor branch is explored first.
    """
    start = time.monotonic()
    comp = _Compiled(model)
    n = comp.n
    has_obj = model.objective is not None
    prio = [0] * n
    if priorities:
        for k, p in priorities.items():
            prio[model.index[k]] = p
    int_idx = [j for j in range(n) if comp.is_int[j]]
    int_idx.sort(key=lambda j: (-prio[j], j))

    root_lb = [v.lb if v.lb is None or v.kind == CONTINUOUS else int(math.ceil(v.lb)) for v in model.vars]
    root_ub = [v.ub if v.ub is None or v.kind == CONTINUOUS else int(math.floor(v.ub)) for v in model.vars]
    best_x = None
    best_val: Fraction | None = None
    nodes = 0
    lp_calls = 0
    stack = [(root_lb, root_ub)]

    def cutoff():
        if best_val is None or not has_obj:
            return None
        step = comp.obj_step
        target = best_val - step if step is not None else best_val
        scale = math.lcm(*(c.denominator for c in comp.obj), target.denominator)
        idx = [j for j in range(n) if comp.obj[j] != 0]
        return idx, [int(comp.obj[j] * scale) for j in idx], int(target * scale)

    def stats():
        return SolveStats(nodes, lp_calls, time.monotonic() - start)

    def assignment(x):
        return {v.name: x[j] for j, v in enumerate(model.vars)}

    checked_root = False
    while stack:
        if node_limit is not None and nodes >= node_limit:
            return ResourceLimit("node limit", assignment(best_x) if best_x else None, stats())
        if time_limit is not None and time.monotonic() - start > time_limit:
            return ResourceLimit("time limit", assignment(best_x) if best_x else None, stats())
        lb, ub = stack.pop()
        nodes += 1
        if not _propagate(comp, lb, ub, cutoff()):
            continue
        if all(lb[j] == ub[j] for j in int_idx):
            leaf = _complete_leaf(comp, lb, ub)
            if leaf is not None and (best_val is None or leaf[1] < best_val):
                best_x, best_val = leaf
                if not has_obj:
                    break
            continue
        branch_var = None
        split = None
        if use_relaxation or not checked_root:
            status, xf, val = _relax(comp, lb, ub)
            lp_calls += 1
            if status == "unbounded" and has_obj and not checked_root:
                # integers are bounded, so only the continuous part can be unbounded
                raise IlpModelError("continuous relaxation is unbounded")
            checked_root = True
            if status == "infeasible":
                continue
            if status == "optimal":
                if best_val is not None and has_obj:
                    tol = 1e-6 * (1 + abs(val))
                    step = float(comp.obj_step) if comp.obj_step is not None else 0.0
                    if val - tol > float(best_val) - step:
                        continue
                top = None
                for j in int_idx:
                    if lb[j] == ub[j]:
                        continue
                    f = xf[j] - math.floor(xf[j])
                    frac = min(f, 1 - f)
                    if frac <= INT_TOL:
                        continue
                    if top is not None and prio[j] < prio[top[1]]:
                        break
                    if top is None or frac > top[0] + 1e-12:
                        top = (frac, j)
                if top is not None:
                    branch_var = top[1]
                    split = math.floor(xf[branch_var])
                else:
                    # near-integral relaxation: try the rounded point exactly
                    fix_lb, fix_ub = list(lb), list(ub)
                    for j in int_idx:
                        r = min(max(round(xf[j]), lb[j]), ub[j])
                        fix_lb[j] = fix_ub[j] = r
                    if _propagate(comp, fix_lb, fix_ub, cutoff()):
                        leaf = _complete_leaf(comp, fix_lb, fix_ub)
                        if leaf is not None and (best_val is None or leaf[1] < best_val):
                            best_x, best_val = leaf
                            if not has_obj:
                                break
                            continue
                    j = next(j for j in int_idx if lb[j] != ub[j])
                    branch_var = j
                    split = min(max(round(xf[j]), lb[j]), ub[j] - 1)
        if branch_var is None:
            branch_var = next(j for j in int_idx if lb[j] != ub[j])
            split = (lb[branch_var] + ub[branch_var]) // 2
        lo_lb, lo_ub = list(lb), list(ub)
        hi_lb, hi_ub = list(lb), list(ub)
        lo_ub[branch_var] = split
        hi_lb[branch_var] = split + 1
        # floor branch popped first
        stack.append((hi_lb, hi_ub))
        stack.append((lo_lb, lo_ub))

    if best_x is None:
        return Infeasible(stats())
    result = assignment(best_x)
    if not check_assignment(model, result):
        raise AssertionError("branch-and-bound produced an assignment that fails exact verification")
    if has_obj:
        return Optimal(result, best_val, stats())
    return Feasible(result, stats())


# ---------------------------------------------------------------------------
# LP file export

_LP_NAME = re.compile(r"[^A-Za-z0-9_.]")


def _lp_names(names: Sequence[str]) -> dict[str, str]:
    out, used = {}, set()
    for name in names:
        base = _LP_NAME.sub("_", name) or "v"
        if base[0].isdigit() or base[0] in ".eE":
            base = "x_" + base
        cand, k = base, 1
        while cand in used:
            cand, k = f"{base}_{k}", k + 1
        used.add(cand)
        out[name] = cand
    return out


def _num(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return repr(float(x))


def _expr(terms, names) -> list[str]:
    parts = []
    for k, c in terms:
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        coef = "" if mag == 1 else _num(mag) + " "
        parts.append(f"{sign} {coef}{names[k]}")
    if parts and parts[0].startswith("+ "):
        parts[0] = parts[0][2:]
    return parts


def _wrap(head: str, parts: list[str], per_line: int = 8) -> list[str]:
    lines = []
    for i in range(0, len(parts), per_line):
        chunk = " ".join(parts[i:i + per_line])
        lines.append((head if i == 0 else "   ") + chunk)
    return lines or [head.rstrip()]


def export_lp(model: IlpModel) -> str:
    """CPLEX LP text; identical models give identical bytes."""
    names = _lp_names([v.name for v in model.vars])
    out = [f"\\ {model.name}", "Minimize"]
    obj = list(model.objective or ())
    if not obj and model.vars:
        obj = [(model.vars[0].name, Fraction(0))]
        out.append(f" obj: 0 {names[model.vars[0].name]}")
    else:
        out.extend(_wrap(" obj: ", _expr(obj, names)))
    out.append("Subject To")
    cnames = _lp_names([c.name for c in model.constraints])
    for c in model.constraints:
        parts = _expr(c.coeffs, names) or ["0 " + names[model.vars[0].name]]
        parts[-1] += f" {c.rel} {_num(c.rhs)}"
        out.extend(_wrap(f" {cnames[c.name]}: ", parts))
    out.append("Bounds")
    for v in model.vars:
        n = names[v.name]
        if v.lb is None and v.ub is None:
            out.append(f" {n} free")
        elif v.lb is None:
            out.append(f" -inf <= {n} <= {_num(v.ub)}")
        elif v.ub is None:
            out.append(f" {n} >= {_num(v.lb)}")
        else:
            out.append(f" {_num(v.lb)} <= {n} <= {_num(v.ub)}")
    ints = [names[v.name] for v in model.vars if v.kind == INTEGER]
    if ints:
        out.append("General")
        for i in range(0, len(ints), 8):
            out.append(" " + " ".join(ints[i:i + 8]))
    out.append("End")
    return "\n".join(out) + "\n"
