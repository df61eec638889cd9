"""Logic IR: integer terms, quantifier-free formulas, partial states, CNF predicates.

Every node is an immutable, hashable value. Formulas are built from the small
constructor set below; helper functions (``conj``, ``disj``, ...) do light
constant folding so generated queries stay readable.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union


class IRError(Exception):
    """Structural problem with a formula (unknown variable, bad arity, ...)."""


class EvaluationError(IRError):
    """A free variable had no binding during evaluation."""


# ---------------------------------------------------------------------------
# terms

@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Add:
    args: tuple


@dataclass(frozen=True)
class Sub:
    """Left-associative subtraction ``(- a b c)`` = a - b - c."""
    args: tuple


@dataclass(frozen=True)
class Neg:
    arg: "Term"


@dataclass(frozen=True)
class Mul:
    args: tuple


@dataclass(frozen=True)
class Ite:
    cond: "Formula"
    then: "Term"
    other: "Term"


Term = Union[Const, Var, Add, Sub, Neg, Mul, Ite]


# ---------------------------------------------------------------------------
# formulas

CMP_OPS: dict[str, Callable[[int, int], bool]] = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

NEGATED_CMP = {"=": "!=", "!=": "=", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Cmp:
    op: str
    left: Term
    right: Term

    def __post_init__(self) -> None:
        if self.op not in CMP_OPS:
            raise IRError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


Formula = Union[BoolConst, Cmp, And, Or, Not, Implies]
Node = Union[Term, Formula]

TRUE = BoolConst(True)
FALSE = BoolConst(False)


def conj(*parts: Formula) -> Formula:
    """Conjunction with flattening and constant folding."""
    out: list[Formula] = []
    for p in parts:
        if isinstance(p, BoolConst):
            if not p.value:
                return FALSE
            continue
        if isinstance(p, And):
            out.extend(p.args)
        else:
            out.append(p)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*parts: Formula) -> Formula:
    out: list[Formula] = []
    for p in parts:
        if isinstance(p, BoolConst):
            if p.value:
                return TRUE
            continue
        if isinstance(p, Or):
            out.extend(p.args)
        else:
            out.append(p)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def neg(f: Formula) -> Formula:
    if isinstance(f, BoolConst):
        return BoolConst(not f.value)
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def implies(a: Formula, b: Formula) -> Formula:
    if a == TRUE:
        return b
    if a == FALSE or b == TRUE:
        return TRUE
    return Implies(a, b)


# ---------------------------------------------------------------------------
# traversal

def children(node: Node) -> tuple:
    if isinstance(node, (Const, Var, BoolConst)):
        return ()
    if isinstance(node, (Add, Sub, Mul, And, Or)):
        return node.args
    if isinstance(node, (Neg, Not)):
        return (node.arg,)
    if isinstance(node, Ite):
        return (node.cond, node.then, node.other)
    if isinstance(node, Cmp):
        return (node.left, node.right)
    if isinstance(node, Implies):
        return (node.left, node.right)
    raise IRError(f"not an IR node: {node!r}")


def walk(node: Node) -> Iterator[Node]:
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def free_vars(node: Node) -> frozenset[str]:
    return frozenset(n.name for n in walk(node) if isinstance(n, Var))


def rename(node: Node, mapping: Mapping[str, str]) -> Node:
    """Rename variables; names missing from ``mapping`` are kept."""
    return _map_vars(node, lambda v: Var(mapping.get(v.name, v.name)))


def substitute(node: Node, mapping: Mapping[str, Term]) -> Node:
    return _map_vars(node, lambda v: mapping.get(v.name, v))


def _map_vars(node: Node, fn: Callable[[Var], Term]) -> Node:
    if isinstance(node, Var):
        return fn(node)
    if isinstance(node, (Const, BoolConst)):
        return node
    if isinstance(node, (Add, Sub, Mul, And, Or)):
        return type(node)(tuple(_map_vars(a, fn) for a in node.args))
    if isinstance(node, (Neg, Not)):
        return type(node)(_map_vars(node.arg, fn))
    if isinstance(node, Ite):
        return Ite(_map_vars(node.cond, fn), _map_vars(node.then, fn), _map_vars(node.other, fn))
    if isinstance(node, Cmp):
        return Cmp(node.op, _map_vars(node.left, fn), _map_vars(node.right, fn))
    if isinstance(node, Implies):
        return Implies(_map_vars(node.left, fn), _map_vars(node.right, fn))
    raise IRError(f"not an IR node: {node!r}")


def node_count(node: Node) -> int:
    return sum(1 for _ in walk(node))


# ---------------------------------------------------------------------------
# priming and step indexing

PRIME = "'"
STEP_SEP = "@"


def primed(name: str) -> str:
    return name + PRIME


def step_name(name: str, step: int) -> str:
    return f"{name}{STEP_SEP}{step}"


def step_mapping(vars: Sequence[str], step: int) -> dict[str, str]:
    """x -> x@step and x' -> x@(step+1) for every declared variable."""
    m = {v: step_name(v, step) for v in vars}
    m.update({primed(v): step_name(v, step + 1) for v in vars})
    return m


def index_steps(formula: Node, vars: Sequence[str], step: int = 0) -> Node:
    """Rename unprimed variables to step ``step`` and primed ones to ``step + 1``."""
    mapping = step_mapping(vars, step)
    unknown = free_vars(formula) - mapping.keys()
    if unknown:
        raise IRError(f"unknown free variable(s): {', '.join(sorted(unknown))}")
    return rename(formula, mapping)


def unindex_steps(formula: Node, vars: Sequence[str], step: int = 0) -> Node:
    """Inverse of :func:`index_steps` for the same ``vars`` and ``step``."""
    inverse = {v: k for k, v in step_mapping(vars, step).items()}
    unknown = free_vars(formula) - inverse.keys()
    if unknown:
        raise IRError(f"unknown free variable(s): {', '.join(sorted(unknown))}")
    return rename(formula, inverse)


def prime(formula: Node, vars: Sequence[str]) -> Node:
    """x -> x' for the declared variables (the formula must be over ``vars``)."""
    unknown = free_vars(formula) - set(vars)
    if unknown:
        raise IRError(f"unknown free variable(s): {', '.join(sorted(unknown))}")
    return rename(formula, {v: primed(v) for v in vars})


# ---------------------------------------------------------------------------
# partial states

@dataclass(frozen=True)
class PartialState:
    """Assignment of integers to a subset of variables; unbound names are don't-care."""

    items: tuple[tuple[str, int], ...] = ()

    @classmethod
    def of(cls, bindings: Mapping[str, int] | Iterable[tuple[str, int]] = ()) -> "PartialState":
        pairs = bindings.items() if isinstance(bindings, Mapping) else bindings
        return cls(tuple(sorted((str(k), int(v)) for k, v in pairs)))

    @property
    def bindings(self) -> dict[str, int]:
        return dict(self.items)

    def get(self, name: str, default=None):
        for k, v in self.items:
            if k == name:
                return v
        return default

    def __contains__(self, name: str) -> bool:
        return any(k == name for k, _ in self.items)

    def __len__(self) -> int:
        return len(self.items)

    def is_total(self, vars: Iterable[str]) -> bool:
        bound = {k for k, _ in self.items}
        return all(v in bound for v in vars)

    def values(self, vars: Sequence[str]) -> tuple:
        """Positional view; ``None`` stands for don't-care."""
        b = self.bindings
        return tuple(b.get(v) for v in vars)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{k}:{v}" for k, v in self.items) + "}"


def project(state: PartialState, keep: Iterable[str]) -> PartialState:
    keep = set(keep)
    return PartialState(tuple((k, v) for k, v in state.items if k in keep))


def complete(state: PartialState, vars: Iterable[str], fill: Callable[[str], int]) -> PartialState:
    b = state.bindings
    for v in vars:
        if v not in b:
            b[v] = fill(v)
    return PartialState.of(b)


# ---------------------------------------------------------------------------
# evaluation

def eval_term(term: Term, env: Mapping[str, int]) -> int:
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Var):
        try:
            return env[term.name]
        except KeyError:
            raise EvaluationError(f"variable {term.name!r} is unbound") from None
    if isinstance(term, Add):
        return sum(eval_term(a, env) for a in term.args)
    if isinstance(term, Sub):
        first, *rest = term.args
        return eval_term(first, env) - sum(eval_term(a, env) for a in rest)
    if isinstance(term, Neg):
        return -eval_term(term.arg, env)
    if isinstance(term, Mul):
        out = 1
        for a in term.args:
            out *= eval_term(a, env)
        return out
    if isinstance(term, Ite):
        return eval_term(term.then if _eval(term.cond, env) else term.other, env)
    raise IRError(f"not a term: {term!r}")


def _eval(f: Formula, env: Mapping[str, int]) -> bool:
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, Cmp):
        return CMP_OPS[f.op](eval_term(f.left, env), eval_term(f.right, env))
    if isinstance(f, And):
        return all(_eval(a, env) for a in f.args)
    if isinstance(f, Or):
        return any(_eval(a, env) for a in f.args)
    if isinstance(f, Not):
        return not _eval(f.arg, env)
    if isinstance(f, Implies):
        return (not _eval(f.left, env)) or _eval(f.right, env)
    raise IRError(f"not a formula: {f!r}")


def eval_formula(formula: Formula, state: PartialState | Mapping[str, int]) -> bool:
    """Evaluate under a state binding every free variable of ``formula``.

    Missing bindings raise :class:`EvaluationError` up front rather than
    depending on short-circuit order.
    """
    env = state.bindings if isinstance(state, PartialState) else dict(state)
    missing = free_vars(formula) - env.keys()
    if missing:
        raise EvaluationError(f"unbound variable(s): {', '.join(sorted(missing))}")
    return _eval(formula, env)


# ---------------------------------------------------------------------------
# CNF predicates over strict linear atoms

def _linear_sum(pairs: list[tuple[str, int]]) -> Term:
    terms = [Var(k) if c == 1 else Mul((Const(c), Var(k))) for k, c in pairs]
    return terms[0] if len(terms) == 1 else Add(tuple(terms))


@dataclass(frozen=True)
class Atom:
    """``sum(c * x) + bias > 0`` with integer coefficients."""

    coeffs: tuple[tuple[str, int], ...]
    bias: int

    @classmethod
    def of(cls, coeffs: Mapping[str, int], bias: int) -> "Atom":
        return cls(tuple(sorted((k, int(c)) for k, c in coeffs.items() if c != 0)), int(bias))

    @classmethod
    def geq(cls, coeffs: Mapping[str, int], const: int) -> "Atom":
        """``sum(c * x) >= const`` as a strict atom over the integers."""
        return cls.of(coeffs, 1 - const)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(k for k, c in self.coeffs if c != 0)

    def is_constant(self) -> bool:
        return not self.variables

    def value(self, state: PartialState | Mapping[str, int]) -> int:
        b = state.bindings if isinstance(state, PartialState) else state
        return sum(c * b[k] for k, c in self.coeffs if k in b) + self.bias

    def holds(self, state: PartialState | Mapping[str, int]) -> bool:
        return self.value(state) > 0

    def negate(self) -> "Atom":
        # not (e > 0)  <=>  -e + 1 > 0 over the integers
        return Atom(tuple((k, -c) for k, c in self.coeffs), 1 - self.bias)

    def l1(self) -> int:
        return sum(abs(c) for _, c in self.coeffs)

    def to_formula(self) -> Formula:
        """Readable equivalent: positive-coefficient side vs negative side.

        ``j - i + 1 > 0`` becomes ``i <= j``; ``i + 0 > 0`` style atoms with one
        side empty compare against a constant.
        """
        if self.is_constant():
            return BoolConst(self.bias > 0)
        pos = [(k, c) for k, c in self.coeffs if c > 0]
        negs = [(k, -c) for k, c in self.coeffs if c < 0]
        bound = 1 - self.bias  # sum(pos) - sum(negs) >= bound
        if not negs:
            return Cmp(">=", _linear_sum(pos), Const(bound))
        if not pos:
            return Cmp("<=", _linear_sum(negs), Const(-bound))
        rhs = _linear_sum(pos)
        if bound > 0:
            rhs = Sub((rhs, Const(bound)))
        elif bound < 0:
            rhs = Add((rhs, Const(-bound))) if not isinstance(rhs, Add) else Add(rhs.args + (Const(-bound),))
        return Cmp("<=", _linear_sum(negs), rhs)

    def __str__(self) -> str:
        parts = [f"{c}*{k}" if c != 1 else k for k, c in self.coeffs]
        return " + ".join(parts + [str(self.bias)]) + " > 0"


@dataclass(frozen=True)
class CnfPredicate:
    """Conjunction of disjunctions of atoms. No conjuncts means ``true``."""

    conjuncts: tuple[tuple[Atom, ...], ...] = ()

    @classmethod
    def true(cls) -> "CnfPredicate":
        return cls(())

    @classmethod
    def false(cls) -> "CnfPredicate":
        return cls(((Atom((), 0),),))

    @classmethod
    def single(cls, atom: Atom) -> "CnfPredicate":
        return cls(((atom,),))

    def atoms(self) -> Iterator[Atom]:
        for clause in self.conjuncts:
            yield from clause

    def is_true(self) -> bool:
        return not self.conjuncts

    def to_formula(self) -> Formula:
        return conj(*(disj(*(a.to_formula() for a in clause)) for clause in self.conjuncts))

    def l1(self) -> int:
        return sum(a.l1() for a in self.atoms())

    def max_coeff(self) -> int:
        return max((abs(c) for a in self.atoms() for _, c in a.coeffs), default=0)

    def __str__(self) -> str:
        if not self.conjuncts:
            return "true"
        return " & ".join("(" + " | ".join(str(a) for a in clause) + ")" for clause in self.conjuncts)


def relevant_vars(pred: CnfPredicate) -> frozenset[str]:
    out: set[str] = set()
    for a in pred.atoms():
        out |= a.variables
    return frozenset(out)


def eval_predicate(pred: CnfPredicate, state: PartialState | Mapping[str, int]) -> bool:
    """Evaluate with don't-care coordinates contributing zero to each atom."""
    return all(any(a.holds(state) for a in clause) for clause in pred.conjuncts)


# ---------------------------------------------------------------------------
# verification problems

@dataclass(frozen=True)
class VcProblem:
    vars: tuple[str, ...]
    pre: Formula
    trans: Formula
    post: Formula
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not self.vars:
            raise IRError("a verification problem needs at least one variable")
        if len(set(self.vars)) != len(self.vars):
            raise IRError("duplicate variable declaration")
        declared = set(self.vars)
        both = declared | {primed(v) for v in self.vars}
        for label, f, allowed in (("pre", self.pre, declared), ("post", self.post, declared),
                                  ("trans", self.trans, both)):
            extra = free_vars(f) - allowed
            if extra:
                raise IRError(f"{label} mentions undeclared variable(s): {', '.join(sorted(extra))}")

    @property
    def primed_vars(self) -> tuple[str, ...]:
        return tuple(primed(v) for v in self.vars)

    def post_primed(self) -> Formula:
        return prime(self.post, self.vars)
