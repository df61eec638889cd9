"""Reading verification problems and writing invariants.

Two input dialects are understood:

``sygus-inv``
    The SyGuS invariant-track subset: ``set-logic``, ``synth-inv``,
    ``declare-primed-var``/``declare-var``, ``define-fun``, ``inv-constraint``
    and ``check-synth``.

``triple-sexp``
    A compact format with one block per relation::

        (vars i j k n y)
        (pre (and (= i 0) (= j 0) (>= k 0) (>= n 0)))
        (trans (and (<= i n) (= i! (+ i 1)) (= j! (+ j 1)) (= k! k) (= n! n) (= y! (* i j))))
        (post (or (<= i n) (>= (+ i j k) (* 2 n)) (>= y (* n n))))

Primed variables may be written ``x!`` or ``x'``; both normalise to ``x'``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence, Union

from . import ir
from .ir import (
    Add, And, BoolConst, Cmp, CnfPredicate, Const, Formula, Implies, Ite, Mul,
    Neg, Not, Or, Sub, Term, Var, VcProblem,
)
from .sexp import SexpError, SList, Symbol, parse_all, position

DIALECTS = ("sygus-inv", "triple-sexp")
FORMATS = ("sygus-define-fun", "smtlib-term")

SUPPORTED_LOGICS = {"LIA", "NIA", "ALL", "QF_LIA", "QF_NIA", "LIA_INV"}


class ParseError(Exception):
    """Input rejected; carries a location and a short machine-readable code."""

    def __init__(self, message: str, line: int = 0, column: int = 0, code: str = "syntax"):
        loc = f"{line}:{column}: " if line else ""
        super().__init__(f"{loc}{message}")
        self.message = message
        self.line = line
        self.column = column
        self.code = code

    def to_dict(self) -> dict:
        return {"error": self.code, "message": self.message, "line": self.line, "column": self.column}


@dataclass(frozen=True)
class ProblemSource:
    path: str
    text: str
    dialect: str

    @classmethod
    def from_path(cls, path: str | Path) -> "ProblemSource":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        return cls(str(path), text, detect_dialect(text, path.suffix))

    @classmethod
    def from_text(cls, text: str, dialect: str | None = None, path: str = "<string>") -> "ProblemSource":
        return cls(path, text, dialect or detect_dialect(text, Path(path).suffix))


def detect_dialect(text: str, suffix: str = "") -> str:
    if suffix == ".sl":
        return "sygus-inv"
    if suffix in (".inv", ".vc", ".sexp"):
        return "triple-sexp"
    if re.search(r"\(\s*(synth-inv|inv-constraint)\b", text):
        return "sygus-inv"
    return "triple-sexp"


# ---------------------------------------------------------------------------
# names

def normalize_name(name: str) -> str:
    if name.endswith("!") and len(name) > 1:
        return name[:-1] + ir.PRIME
    return name


_SIMPLE_SYMBOL = re.compile(r"^[A-Za-z~!@$%^&*_\-+=<>.?/][A-Za-z0-9~!@$%^&*_\-+=<>.?/]*$")


def quote_symbol(name: str) -> str:
    return name if _SIMPLE_SYMBOL.match(name) else f"|{name}|"


# ---------------------------------------------------------------------------
# IR -> SMT-LIB

def _int_literal(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


def to_smtlib(node: ir.Node) -> str:
    if isinstance(node, Const):
        return _int_literal(node.value)
    if isinstance(node, Var):
        return quote_symbol(node.name)
    if isinstance(node, BoolConst):
        return "true" if node.value else "false"
    if isinstance(node, Add):
        return "(+ " + " ".join(to_smtlib(a) for a in node.args) + ")"
    if isinstance(node, Sub):
        return "(- " + " ".join(to_smtlib(a) for a in node.args) + ")"
    if isinstance(node, Neg):
        return f"(- {to_smtlib(node.arg)})"
    if isinstance(node, Mul):
        return "(* " + " ".join(to_smtlib(a) for a in node.args) + ")"
    if isinstance(node, Ite):
        return f"(ite {to_smtlib(node.cond)} {to_smtlib(node.then)} {to_smtlib(node.other)})"
    if isinstance(node, Cmp):
        if node.op == "!=":
            return f"(not (= {to_smtlib(node.left)} {to_smtlib(node.right)}))"
        return f"({node.op} {to_smtlib(node.left)} {to_smtlib(node.right)})"
    if isinstance(node, And):
        return "(and " + " ".join(to_smtlib(a) for a in node.args) + ")"
    if isinstance(node, Or):
        return "(or " + " ".join(to_smtlib(a) for a in node.args) + ")"
    if isinstance(node, Not):
        return f"(not {to_smtlib(node.arg)})"
    if isinstance(node, Implies):
        return f"(=> {to_smtlib(node.left)} {to_smtlib(node.right)})"
    raise TypeError(f"not an IR node: {node!r}")


# ---------------------------------------------------------------------------
# SMT-LIB -> IR

_UNSUPPORTED = {
    "forall": "quantifier", "exists": "quantifier",
    "select": "array", "store": "array",
    "div": "integer division", "mod": "integer modulo", "/": "real division",
    "to_real": "real", "to_int": "real",
}

_CMP = {"=", "<", "<=", ">", ">="}


@dataclass
class _FunDef:
    params: list
    sort: str
    body: object


class SmtReader:
    """Converts parsed S-expressions to IR, inlining ``let`` and user functions."""

    def __init__(self, declared: set[str] | None = None, funs: Mapping[str, _FunDef] | None = None):
        self.declared = declared
        self.funs = dict(funs or {})

    def convert(self, expr, env: Mapping[str, ir.Node] | None = None) -> ir.Node:
        return self._conv(expr, dict(env or {}))

    def formula(self, expr, env=None) -> Formula:
        node = self.convert(expr, env)
        if not _is_formula(node):
            line, col = position(expr)
            raise ParseError("expected a Boolean expression", line, col, "sort")
        return node

    def _conv(self, expr, env):
        if isinstance(expr, bool):
            return BoolConst(expr)
        if isinstance(expr, int):
            return Const(expr)
        if isinstance(expr, Symbol):
            return self._symbol(expr, env)
        if isinstance(expr, str):
            raise ParseError("unexpected string literal", code="unsupported")
        if not isinstance(expr, list) or not expr:
            line, col = position(expr)
            raise ParseError("empty application", line, col)
        head = expr[0]
        line, col = position(expr)
        if not isinstance(head, Symbol):
            raise ParseError("expected an operator symbol", line, col)
        op = head.name
        if op in _UNSUPPORTED:
            raise ParseError(f"unsupported construct: {_UNSUPPORTED[op]} ({op})", head.line, head.column, "unsupported")
        if op == "let":
            return self._let(expr, env)
        args = [self._conv(a, env) for a in expr[1:]]
        if op in self.funs:
            return self._apply(op, args, expr)
        return self._builtin(op, args, expr)

    def _symbol(self, sym: Symbol, env):
        name = sym.name
        if name in env:
            return env[name]
        if name == "true":
            return ir.TRUE
        if name == "false":
            return ir.FALSE
        if re.fullmatch(r"\d+\.\d*", name):
            raise ParseError(f"unsupported construct: real literal {name}", sym.line, sym.column, "unsupported")
        if name.startswith("#"):
            raise ParseError(f"unsupported construct: bit-vector literal {name}", sym.line, sym.column, "unsupported")
        if name in self.funs and not self.funs[name].params:
            return self._apply(name, [], [sym])
        norm = normalize_name(name)
        if self.declared is not None and norm not in self.declared:
            raise ParseError(f"unknown symbol {name!r}", sym.line, sym.column, "unknown-symbol")
        return Var(norm)

    def _let(self, expr, env):
        line, col = position(expr)
        if len(expr) != 3 or not isinstance(expr[1], list):
            raise ParseError("malformed let", line, col)
        inner = dict(env)
        for binding in expr[1]:
            if not (isinstance(binding, list) and len(binding) == 2 and isinstance(binding[0], Symbol)):
                raise ParseError("malformed let binding", *position(binding))
            inner[binding[0].name] = self._conv(binding[1], env)
        return self._conv(expr[2], inner)

    def _apply(self, name, args, expr):
        fd = self.funs[name]
        if len(args) != len(fd.params):
            raise ParseError(f"{name} expects {len(fd.params)} argument(s), got {len(args)}", *position(expr), "arity")
        local = {p: a for p, a in zip(fd.params, args)}
        return self._conv(fd.body, local)

    def _builtin(self, op, args, expr):
        line, col = position(expr)

        def need(n=None, at_least=None):
            if n is not None and len(args) != n:
                raise ParseError(f"{op} expects {n} argument(s)", line, col, "arity")
            if at_least is not None and len(args) < at_least:
                raise ParseError(f"{op} expects at least {at_least} argument(s)", line, col, "arity")

        if op in ("and", "or"):
            _check_sorts(args, True, op, line, col)
            if not args:
                return ir.TRUE if op == "and" else ir.FALSE
            return And(tuple(args)) if op == "and" else Or(tuple(args))
        if op == "not":
            need(1)
            _check_sorts(args, True, op, line, col)
            return Not(args[0])
        if op == "=>":
            need(at_least=2)
            _check_sorts(args, True, op, line, col)
            out = args[-1]
            for a in reversed(args[:-1]):
                out = Implies(a, out)
            return out
        if op == "xor":
            need(2)
            _check_sorts(args, True, op, line, col)
            a, b = args
            return Or((And((a, Not(b))), And((Not(a), b))))
        if op == "ite":
            need(3)
            c, t, e = args
            _check_sorts([c], True, op, line, col)
            if _is_formula(t) and _is_formula(e):
                return Or((And((c, t)), And((Not(c), e))))
            _check_sorts([t, e], False, op, line, col)
            return Ite(c, t, e)
        if op == "=" and args and all(_is_formula(a) for a in args):
            need(at_least=2)
            pairs = [And((Implies(a, b), Implies(b, a))) for a, b in zip(args, args[1:])]
            return pairs[0] if len(pairs) == 1 else And(tuple(pairs))
        if op in _CMP:
            need(at_least=2)
            _check_sorts(args, False, op, line, col)
            pairs = [Cmp(op, a, b) for a, b in zip(args, args[1:])]
            return pairs[0] if len(pairs) == 1 else And(tuple(pairs))
        if op == "distinct":
            need(at_least=2)
            _check_sorts(args, False, op, line, col)
            pairs = [Cmp("!=", args[i], args[j]) for i in range(len(args)) for j in range(i + 1, len(args))]
            return pairs[0] if len(pairs) == 1 else And(tuple(pairs))
        if op == "+":
            need(at_least=1)
            _check_sorts(args, False, op, line, col)
            return args[0] if len(args) == 1 else Add(tuple(args))
        if op == "-":
            need(at_least=1)
            _check_sorts(args, False, op, line, col)
            if len(args) == 1:
                a = args[0]
                return Const(-a.value) if isinstance(a, Const) else Neg(a)
            return Sub(tuple(args))
        if op == "*":
            need(at_least=1)
            _check_sorts(args, False, op, line, col)
            return args[0] if len(args) == 1 else Mul(tuple(args))
        if op == "abs":
            need(1)
            _check_sorts(args, False, op, line, col)
            a = args[0]
            return Ite(Cmp(">=", a, Const(0)), a, Neg(a))
        raise ParseError(f"unknown function {op!r}", line, col, "unknown-symbol")


def _is_formula(node) -> bool:
    return isinstance(node, (BoolConst, Cmp, And, Or, Not, Implies))


def _check_sorts(args, want_bool, op, line, col):
    for a in args:
        if _is_formula(a) != want_bool:
            kind = "Bool" if want_bool else "Int"
            raise ParseError(f"{op}: argument must be {kind}", line, col, "sort")


def parse_formula(text: str, declared: Sequence[str] | None = None) -> Formula:
    """Parse one SMT-LIB Boolean term (e.g. a rendered invariant)."""
    from .sexp import parse_one
    try:
        expr = parse_one(text)
    except SexpError as e:
        raise ParseError(e.message, e.line, e.column) from None
    reader = SmtReader(set(declared) | {ir.primed(v) for v in declared} if declared is not None else None)
    return reader.formula(expr)


# ---------------------------------------------------------------------------
# problem files

def parse_problem(source: ProblemSource | str | Path) -> VcProblem:
    if not isinstance(source, ProblemSource):
        source = ProblemSource.from_path(source)
    if source.dialect not in DIALECTS:
        raise ParseError(f"unknown dialect {source.dialect!r}", code="dialect")
    try:
        exprs = parse_all(source.text)
    except SexpError as e:
        raise ParseError(e.message, e.line, e.column) from None
    name = Path(source.path).stem if source.path != "<string>" else ""
    if source.dialect == "sygus-inv":
        return _parse_sygus(exprs, name)
    return _parse_triple(exprs, name)


def _sym(expr, what):
    if not isinstance(expr, Symbol):
        raise ParseError(f"expected {what}", *position(expr))
    return expr.name


def _check_sort(sort_expr):
    if isinstance(sort_expr, Symbol) and sort_expr.name == "Int":
        return "Int"
    if isinstance(sort_expr, Symbol) and sort_expr.name == "Bool":
        return "Bool"
    shown = sort_expr.name if isinstance(sort_expr, Symbol) else "(" + " ".join(str(s) for s in sort_expr) + ")"
    raise ParseError(f"unsupported construct: sort {shown}", *position(sort_expr), "unsupported")


def _parse_triple(exprs, name) -> VcProblem:
    blocks: dict[str, SList] = {}
    for e in exprs:
        if not isinstance(e, list) or not e or not isinstance(e[0], Symbol):
            raise ParseError("expected a (keyword ...) block", *position(e))
        key = e[0].name
        if key not in ("vars", "pre", "trans", "post"):
            raise ParseError(f"unknown block {key!r}", e[0].line, e[0].column)
        if key in blocks:
            raise ParseError(f"duplicate block {key!r}", e[0].line, e[0].column)
        blocks[key] = e
    for key in ("vars", "pre", "trans", "post"):
        if key not in blocks:
            raise ParseError(f"missing ({key} ...) block", code="missing")
    vars_block = blocks["vars"]
    names = []
    for item in vars_block[1:]:
        if isinstance(item, list):
            if len(item) != 2:
                raise ParseError("malformed variable declaration", *position(item))
            if _check_sort(item[1]) != "Int":
                raise ParseError("unsupported construct: Bool variable", *position(item), "unsupported")
            item = item[0]
        names.append(_sym(item, "a variable name"))
    if not names:
        raise ParseError("empty variable list", *position(vars_block), "empty-vars")
    if len(set(names)) != len(names):
        raise ParseError("duplicate variable", *position(vars_block))
    for key in ("pre", "trans", "post"):
        if len(blocks[key]) != 2:
            raise ParseError(f"({key} ...) takes exactly one formula", *position(blocks[key]))
    unprimed = set(names)
    both = unprimed | {ir.primed(v) for v in names}
    pre = SmtReader(unprimed).formula(blocks["pre"][1])
    trans = SmtReader(both).formula(blocks["trans"][1])
    post = SmtReader(unprimed).formula(blocks["post"][1])
    return VcProblem(tuple(names), pre, trans, post, name=name)


def _parse_sygus(exprs, name) -> VcProblem:
    funs: dict[str, _FunDef] = {}
    inv_name = None
    inv_params: list[str] = []
    declared_primed: set[str] = set()
    declared_vars: set[str] = set()
    constraint = None
    for e in exprs:
        if not isinstance(e, list) or not e or not isinstance(e[0], Symbol):
            raise ParseError("expected a command", *position(e))
        cmd = e[0].name
        if cmd == "set-logic":
            logic = _sym(e[1], "a logic name") if len(e) > 1 else ""
            if logic not in SUPPORTED_LOGICS:
                raise ParseError(f"unsupported construct: logic {logic}", *position(e), "unsupported")
        elif cmd == "synth-inv":
            if len(e) != 3:
                if len(e) > 3:
                    raise ParseError("unsupported construct: grammar-restricted synth-inv", *position(e), "unsupported")
                raise ParseError("malformed synth-inv", *position(e))
            inv_name = _sym(e[1], "an invariant name")
            for p in e[2]:
                if not isinstance(p, list) or len(p) != 2:
                    raise ParseError("malformed parameter", *position(p))
                if _check_sort(p[1]) != "Int":
                    raise ParseError("unsupported construct: Bool state variable", *position(p), "unsupported")
                inv_params.append(_sym(p[0], "a parameter name"))
        elif cmd in ("declare-primed-var", "declare-var"):
            if len(e) != 3:
                raise ParseError(f"malformed {cmd}", *position(e))
            v = _sym(e[1], "a variable name")
            if _check_sort(e[2]) != "Int":
                raise ParseError("unsupported construct: Bool state variable", *position(e), "unsupported")
            (declared_primed if cmd == "declare-primed-var" else declared_vars).add(v)
        elif cmd == "define-fun":
            if len(e) != 5:
                raise ParseError("malformed define-fun", *position(e))
            fname = _sym(e[1], "a function name")
            params = []
            for p in e[2]:
                if not isinstance(p, list) or len(p) != 2:
                    raise ParseError("malformed parameter", *position(p))
                _check_sort(p[1])
                params.append(_sym(p[0], "a parameter name"))
            funs[fname] = _FunDef(params, _check_sort(e[3]), e[4])
        elif cmd == "inv-constraint":
            if len(e) != 5:
                raise ParseError("malformed inv-constraint", *position(e))
            constraint = [_sym(x, "a function name") for x in e[1:]]
        elif cmd in ("check-synth", "set-option", "set-info"):
            pass
        elif cmd in ("constraint", "declare-fun", "synth-fun"):
            raise ParseError(f"unsupported construct: {cmd}", e[0].line, e[0].column, "unsupported")
        else:
            raise ParseError(f"unknown command {cmd!r}", e[0].line, e[0].column)

    if inv_name is None:
        raise ParseError("missing synth-inv", code="missing")
    if not inv_params:
        raise ParseError("empty variable list", code="empty-vars")
    if constraint is None:
        raise ParseError("missing inv-constraint", code="missing")
    inv, pre_f, trans_f, post_f = constraint
    if inv != inv_name:
        raise ParseError(f"inv-constraint names {inv!r}, expected {inv_name!r}")
    for f in (pre_f, trans_f, post_f):
        if f not in funs:
            raise ParseError(f"undefined function {f!r}", code="missing")
    n = len(inv_params)
    vars = tuple(inv_params)
    if len(funs[pre_f].params) != n or len(funs[post_f].params) != n:
        raise ParseError("pre/post arity does not match the invariant signature", code="arity")
    if len(funs[trans_f].params) != 2 * n:
        raise ParseError(
            f"variable arity mismatch: trans takes {len(funs[trans_f].params)} parameter(s), "
            f"expected {n} unprimed + {n} primed", code="arity")
    if declared_primed and declared_primed != set(vars):
        raise ParseError("variable arity mismatch between declared primed variables and the invariant signature",
                         code="arity")

    cur = {v: Var(v) for v in vars}
    nxt = {v: Var(ir.primed(v)) for v in vars}

    def body(fname, env_vars):
        fd = funs[fname]
        if fd.sort != "Bool":
            raise ParseError(f"{fname} must return Bool", code="sort")
        env = {p: a for p, a in zip(fd.params, env_vars)}
        # only parameters are in scope inside a relation body
        return SmtReader(set(), funs).formula(fd.body, env)

    pre = body(pre_f, [cur[v] for v in vars])
    trans = body(trans_f, [cur[v] for v in vars] + [nxt[v] for v in vars])
    post = body(post_f, [cur[v] for v in vars])
    return VcProblem(vars, pre, trans, post, name=name)


# ---------------------------------------------------------------------------
# output

def render_invariant(pred: Union[CnfPredicate, Formula], vars: Sequence[str],
                     format: str = "sygus-define-fun", name: str = "inv-f") -> str:
    formula = pred.to_formula() if isinstance(pred, CnfPredicate) else pred
    extra = ir.free_vars(formula) - set(vars)
    if extra:
        raise ValueError(f"invariant mentions undeclared variable(s): {', '.join(sorted(extra))}")
    body = to_smtlib(formula)
    if format == "smtlib-term":
        return body
    if format != "sygus-define-fun":
        raise ValueError(f"unknown format {format!r}")
    params = " ".join(f"({quote_symbol(v)} Int)" for v in vars)
    return f"(define-fun {name} ({params}) Bool {body})"


def render_problem(problem: VcProblem, dialect: str = "triple-sexp") -> str:
    """Serialise a problem back to text (used for generated corpora)."""
    def out(f):
        text = to_smtlib(f)
        for v in problem.vars:
            text = text.replace(quote_symbol(ir.primed(v)), f"{v}!")
        return text

    if dialect == "triple-sexp":
        return "\n".join([
            f"(vars {' '.join(problem.vars)})",
            f"(pre {out(problem.pre)})",
            f"(trans {out(problem.trans)})",
            f"(post {out(problem.post)})",
            "",
        ])
    if dialect != "sygus-inv":
        raise ValueError(f"unknown dialect {dialect!r}")
    sig = " ".join(f"({v} Int)" for v in problem.vars)
    sig2 = " ".join(f"({v}! Int)" for v in problem.vars)
    lines = ["(set-logic LIA)", f"(synth-inv inv-f ({sig}))"]
    lines += [f"(declare-primed-var {v} Int)" for v in problem.vars]
    lines += [
        f"(define-fun pre-f ({sig}) Bool {out(problem.pre)})",
        f"(define-fun trans-f ({sig} {sig2}) Bool {out(problem.trans)})",
        f"(define-fun post-f ({sig}) Bool {out(problem.post)})",
        "(inv-constraint inv-f pre-f trans-f post-f)",
        "(check-synth)",
        "",
    ]
    return "\n".join(lines)
