"""Sparse zero-error CNF classifiers learned by integer programming.

For ``C`` conjuncts of ``D`` atoms each, the model has per atom ``(c, d)`` an
integer weight vector ``w = w+ - w-`` and bias ``b``. Per example ``n`` it has
an indicator ``z[n,c,d]`` for ``<w, s_n> + b > 0`` and an indicator
``y[n,c]`` for the disjunction. The label constraints force the CNF to agree
with every label. The objective is the L1 norm of the weights plus ``lam``
times the number of variables used, which is tracked by binary ``mu[j]``.

Don't-care coordinates of a state are simply left out of that state's inner
product. Strict inequalities are tightened over the integers
(``a < e`` becomes ``a + 1 <= e``).
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from . import ilp
from .ir import Atom, CnfPredicate, PartialState, eval_predicate, project, relevant_vars

DIRECT = "direct"
FLIPPED = "flipped"
TOP_DROP = "drop"
TOP_GLOBAL = "global"

DEFAULT_LADDER: tuple[tuple[int, str], ...] = ((1, DIRECT), (1, FLIPPED), (2, DIRECT), (2, FLIPPED))


class LearnerError(Exception):
    pass


class LearnerConfigError(LearnerError):
    pass


class NoSeparator(LearnerError):
    """No predicate in the hypothesis class separates the data.

    ``collision`` holds a positive and a negative state that are identical on
    the learned variables, when that is the reason.
    """

    def __init__(self, message: str, collision: tuple[PartialState, PartialState] | None = None):
        super().__init__(message)
        self.collision = collision


NoSeparatorPossible = NoSeparator


class LearnTimeout(LearnerError):
    """The ILP search hit its node or time budget.

    ``incumbent`` is a zero-error predicate found before the budget ran out,
    if any; it is not guaranteed to be optimal.
    """

    def __init__(self, message: str, incumbent: "LearnResult | None" = None):
        super().__init__(message)
        self.incumbent = incumbent


@dataclass(frozen=True)
class Dataset:
    examples: tuple[tuple[PartialState, int], ...]
    vars: tuple[str, ...]

    @classmethod
    def from_lists(cls, positives: Iterable[PartialState], negatives: Iterable[PartialState],
                   vars: Sequence[str]) -> "Dataset":
        ex = [(s, 1) for s in positives] + [(s, 0) for s in negatives]
        return cls(tuple(ex), tuple(vars))

    @property
    def positives(self) -> list[PartialState]:
        return [s for s, l in self.examples if l == 1]

    @property
    def negatives(self) -> list[PartialState]:
        return [s for s, l in self.examples if l == 0]

    def collision(self) -> tuple[PartialState, PartialState] | None:
        pos = {s for s, l in self.examples if l == 1}
        for s, l in self.examples:
            if l == 0 and s in pos:
                return s, s
        return None

    def project(self, keep: Iterable[str]) -> "Dataset":
        keep = [v for v in self.vars if v in set(keep)]
        return Dataset(tuple((project(s, keep), l) for s, l in self.examples), tuple(keep))

    def flipped(self) -> "Dataset":
        return Dataset(tuple((s, 1 - l) for s, l in self.examples), self.vars)


@dataclass(frozen=True)
class LearnerConfig:
    C: int = 1
    D: int = 1
    coeff_bound: int = 1000
    bigM: int | None = None
    lam: Fraction = Fraction(100)
    polarity: str = DIRECT
    bias_bound: int | None = None  # defaults to coeff_bound
    objective: bool = True
    top_mode: str = TOP_DROP
    complete: bool = False
    seed: int = 0
    node_limit: int | None = 100_000
    time_limit: float | None = 30.0

    def __post_init__(self):
        if self.C < 1 or self.D < 1 or self.coeff_bound < 1:
            raise LearnerConfigError("C, D and coeff_bound must be positive")
        if self.bias_bound is not None and self.bias_bound < 0:
            raise LearnerConfigError("bias_bound must be non-negative")
        if self.polarity not in (DIRECT, FLIPPED):
            raise LearnerConfigError(f"unknown polarity {self.polarity!r}")
        if self.top_mode not in (TOP_DROP, TOP_GLOBAL):
            raise LearnerConfigError(f"unknown don't-care mode {self.top_mode!r}")
        if Fraction(self.lam) < 0:
            raise LearnerConfigError("lam must be non-negative")


@dataclass(frozen=True)
class LearnResult:
    predicate: CnfPredicate
    relevant: frozenset[str]
    stats: dict = field(default_factory=dict, compare=False)


def required_big_m(dataset: Dataset, coeff_bound: int, bias_bound: int | None = None) -> int:
    """Smallest M that keeps the big-M linkage exact for this data."""
    mass = max((sum(abs(v) for _, v in s.items if v is not None) for s, _ in dataset.examples), default=0)
    return coeff_bound * (1 + mass) + (coeff_bound if bias_bound is None else bias_bound) + 1


def effective_big_m(dataset: Dataset, config: LearnerConfig) -> int:
    need = required_big_m(dataset, config.coeff_bound, config.bias_bound)
    if config.bigM is None:
        return max(100_000, need)
    if config.bigM < need:
        raise LearnerConfigError(f"bigM={config.bigM} is too small for this data (needs at least {need})")
    return config.bigM


# variable naming inside the model
def _w(c, d, j): return f"w_{c}_{d}_{j}"
def _wp(c, d, j): return f"wp_{c}_{d}_{j}"
def _wm(c, d, j): return f"wm_{c}_{d}_{j}"
def _b(c, d): return f"b_{c}_{d}"
def _z(n, c, d): return f"z_{n}_{c}_{d}"
def _y(n, c): return f"y_{n}_{c}"
def _mu(j): return f"mu_{j}"


def encode(dataset: Dataset, config: LearnerConfig) -> ilp.IlpModel:
    """Build the ILP. Variables are indexed by position in ``dataset.vars``."""
    hit = dataset.collision()
    if hit is not None:
        raise NoSeparator(f"state {hit[0]} is labeled both positive and negative", hit)
    M = effective_big_m(dataset, config)
    C, D, cb = config.C, config.D, config.coeff_bound
    bb = cb if config.bias_bound is None else config.bias_bound
    nv = len(dataset.vars)
    pos_of = {v: j for j, v in enumerate(dataset.vars)}
    m = ilp.IlpModel("learn")

    for j in range(nv):
        m.add_binary(_mu(j))
    for c in range(C):
        for d in range(D):
            for j in range(nv):
                m.add_var(_w(c, d, j), ilp.INTEGER, -cb, cb)
                m.add_var(_wp(c, d, j), ilp.INTEGER, 0, cb)
                m.add_var(_wm(c, d, j), ilp.INTEGER, 0, cb)
            m.add_var(_b(c, d), ilp.INTEGER, -bb, bb)
    for n in range(len(dataset.examples)):
        for c in range(C):
            m.add_binary(_y(n, c))
            for d in range(D):
                m.add_binary(_z(n, c, d))

    # z[n,c,d] <=> <w_cd, s_n> + b_cd > 0 over the bound coordinates of s_n
    for n, (state, _) in enumerate(dataset.examples):
        coords = [(pos_of[k], v) for k, v in state.items if k in pos_of and v != 0]
        for c in range(C):
            for d in range(D):
                lin = {_w(c, d, j): v for j, v in coords}
                lin[_b(c, d)] = 1
                # -M(1 - z) < lin   ->   lin - M z >= 1 - M
                m.add_constraint({**lin, _z(n, c, d): -M}, ">=", 1 - M, f"pos_{n}_{c}_{d}")
                # lin <= M z
                m.add_constraint({**lin, _z(n, c, d): -M}, "<=", 0, f"neg_{n}_{c}_{d}")

    # y[n,c] <=> some z[n,c,d]
    for n in range(len(dataset.examples)):
        for c in range(C):
            zs = {_z(n, c, d): 1 for d in range(D)}
            m.add_constraint({**zs, _y(n, c): -M}, ">=", 1 - M, f"orlo_{n}_{c}")
            m.add_constraint({**zs, _y(n, c): -M}, "<=", 0, f"orhi_{n}_{c}")

    # labels
    for n, (_, label) in enumerate(dataset.examples):
        ys = {_y(n, c): 1 for c in range(C)}
        if label == 1:
            m.add_constraint(ys, ">=", C, f"label_{n}")
        else:
            m.add_constraint(ys, "<=", C - 1, f"label_{n}")

    # w = w+ - w-, and mu[j] tracks whether variable j is used anywhere
    for c in range(C):
        for d in range(D):
            for j in range(nv):
                m.add_constraint({_w(c, d, j): 1, _wp(c, d, j): -1, _wm(c, d, j): 1}, "=", 0,
                                 f"split_{c}_{d}_{j}")
    for j in range(nv):
        mass = {}
        for c in range(C):
            for d in range(D):
                mass[_wp(c, d, j)] = 1
                mass[_wm(c, d, j)] = 1
        m.add_constraint({**mass, _mu(j): -M}, ">=", 1 - M, f"uselo_{j}")
        m.add_constraint({**mass, _mu(j): -M}, "<=", 0, f"usehi_{j}")

    if config.top_mode == TOP_GLOBAL:
        # a coordinate that is don't-care anywhere is unusable everywhere
        for j, v in enumerate(dataset.vars):
            if any(v not in s for s, _ in dataset.examples):
                m.add_constraint({_mu(j): 1}, "=", 0, f"top_{j}")

    if config.objective:
        obj = {}
        for c in range(C):
            for d in range(D):
                for j in range(nv):
                    obj[_wp(c, d, j)] = 1
                    obj[_wm(c, d, j)] = 1
        for j in range(nv):
            obj[_mu(j)] = Fraction(config.lam)
        m.set_objective(obj)
    return m


def branching_priorities(model: ilp.IlpModel) -> dict[str, int]:
    """Decide variable usage first, then indicators, then coefficients."""
    out = {}
    for v in model.vars:
        head = v.name.split("_", 1)[0]
        out[v.name] = 2 if head == "mu" else 1 if head in ("z", "y") else 0
    return out


def _normalize(clauses: Iterable[Iterable[Atom]]) -> CnfPredicate:
    out: list[tuple[Atom, ...]] = []
    for clause in clauses:
        atoms: list[Atom] = []
        tautology = False
        for a in clause:
            if a.is_constant():
                if a.bias > 0:
                    tautology = True
                    break
                continue
            if a not in atoms:
                atoms.append(a)
        if tautology:
            continue
        if not atoms:
            return CnfPredicate.false()
        key = tuple(atoms)
        if key not in out:
            out.append(key)
    return CnfPredicate(tuple(out))


def decode(assignment, config: LearnerConfig, vars: Sequence[str]) -> CnfPredicate:
    """Read the CNF back from a solution; flipped polarity negates it."""
    def integral(name):
        x = Fraction(assignment[name])
        if x.denominator != 1:
            raise LearnerError(f"non-integral value {x} for {name}")
        return int(x)

    atoms = [[Atom.of({v: integral(_w(c, d, j)) for j, v in enumerate(vars)}, integral(_b(c, d)))
              for d in range(config.D)] for c in range(config.C)]
    if config.polarity == DIRECT:
        return _normalize(atoms)
    # not(AND_c OR_d a)  =  OR_c AND_d not a, distributed back into CNF
    negated = [[a.negate() for a in clause] for clause in atoms]
    return _normalize(itertools.product(*negated))


def complete_state(state: PartialState, vars: Sequence[str], seed: int, low: int = -10, high: int = 10
                   ) -> PartialState:
    """Fill don't-care entries with integers drawn from a generator keyed on the state itself,
    so a state is completed the same way wherever it appears."""
    missing = [v for v in vars if v not in state]
    if not missing:
        return state
    rng = random.Random(f"{seed}:{state}")
    b = state.bindings
    for v in missing:
        b[v] = rng.randint(low, high)
    return PartialState.of(b)


def complete_maps(dataset: Dataset, seed: int, low: int = -10, high: int = 10) -> Dataset:
    """Replace every don't-care entry with a seeded random integer."""
    ex = tuple((complete_state(s, dataset.vars, seed, low, high), l) for s, l in dataset.examples)
    return Dataset(ex, dataset.vars)


def solve_step(dataset: Dataset, config: LearnerConfig, dump_dir: str | Path | None = None,
               tag: str = "learn") -> tuple[ilp.IlpOutcome, ilp.IlpModel]:
    model = encode(dataset.flipped() if config.polarity == FLIPPED else dataset, config)
    if dump_dir is not None:
        path = Path(dump_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / f"{tag}_D{config.D}_{config.polarity}.lp").write_text(ilp.export_lp(model))
    out = ilp.solve(model, node_limit=config.node_limit, time_limit=config.time_limit,
                    priorities=branching_priorities(model))
    return out, model


def learn(dataset: Dataset, restrict_to: Iterable[str] | None = None, config: LearnerConfig | None = None,
          ladder: Sequence[tuple[int, str]] = DEFAULT_LADDER, start: int = 0,
          dump_dir: str | Path | None = None, tag: str = "learn") -> LearnResult:
    """Return the first optimal separator along the ladder of (D, polarity) steps.

    States are projected onto ``restrict_to`` first, so the predicate never
    mentions other variables.
    """
    config = config or LearnerConfig()
    keep = list(dataset.vars) if restrict_to is None else [v for v in dataset.vars if v in set(restrict_to)]
    if not keep:
        raise LearnerError("restrict_to must name at least one variable")
    if config.complete:
        dataset = complete_maps(dataset, config.seed)
    data = dataset.project(keep)
    hit = data.collision()
    if hit is not None:
        raise NoSeparator(f"state {hit[0]} is labeled both ways on {{{', '.join(keep)}}}", hit)
    t0 = time.monotonic()
    timed_out: LearnTimeout | None = None
    for step in range(start, len(ladder)):
        D, polarity = ladder[step]
        cfg = replace(config, D=D, polarity=polarity)
        out, model = solve_step(data, cfg, dump_dir, f"{tag}_{step}")
        if isinstance(out, (ilp.Optimal, ilp.Feasible)):
            pred = decode(out.assignment, cfg, data.vars)
            stats = {"ladder_step": step, "D": D, "polarity": polarity, "nodes": out.stats.nodes,
                     "seconds": time.monotonic() - t0, **model.stats()}
            return LearnResult(pred, relevant_vars(pred), stats)
        if isinstance(out, ilp.ResourceLimit):
            incumbent = None
            if out.incumbent is not None:
                pred = decode(out.incumbent, cfg, data.vars)
                incumbent = LearnResult(pred, relevant_vars(pred), {"ladder_step": step, "optimal": False})
            timed_out = LearnTimeout(f"ILP budget exhausted at ladder step {step} ({out.reason})", incumbent)
            raise timed_out
    raise NoSeparator(f"no separator over {{{', '.join(keep)}}} at any ladder step")


def ilp_form(pred: CnfPredicate, polarity: str) -> CnfPredicate:
    """The CNF the ILP has to find for ``pred`` to come out of a ladder step."""
    if polarity == DIRECT:
        return pred
    negated = [[a.negate() for a in clause] for clause in pred.conjuncts]
    return CnfPredicate(tuple(tuple(c) for c in itertools.product(*negated)))


def separator_feasible(dataset: Dataset, pred: CnfPredicate, polarity: str = DIRECT,
                       config: LearnerConfig | None = None) -> bool:
    """Whether the encoding admits a solution whose weights spell out ``pred``.

    The clause count and width are taken from ``pred``; shorter clauses are
    padded with the constant-false atom.
    """
    config = config or LearnerConfig()
    extra = relevant_vars(pred) - set(dataset.vars)
    if extra:
        raise LearnerError(f"predicate mentions unknown variable(s): {', '.join(sorted(extra))}")
    side = ilp_form(pred, polarity)
    if not side.conjuncts:
        side = CnfPredicate(((Atom((), 1),),))
    C, D = len(side.conjuncts), max(len(cl) for cl in side.conjuncts)
    cfg = replace(config, C=C, D=D, polarity=polarity, objective=False)
    data = dataset.flipped() if polarity == FLIPPED else dataset
    try:
        model = encode(data, cfg)
    except NoSeparator:
        return False
    for c, clause in enumerate(side.conjuncts):
        padded = list(clause) + [Atom((), 0)] * (D - len(clause))
        for d, atom in enumerate(padded):
            coeffs = dict(atom.coeffs)
            for j, v in enumerate(dataset.vars):
                model.add_constraint({_w(c, d, j): 1}, "=", coeffs.get(v, 0), f"fix_w_{c}_{d}_{j}")
            model.add_constraint({_b(c, d): 1}, "=", atom.bias, f"fix_b_{c}_{d}")
    out = ilp.solve(model, node_limit=cfg.node_limit, time_limit=cfg.time_limit)
    return isinstance(out, (ilp.Optimal, ilp.Feasible))


def filter_variables(result: LearnResult) -> frozenset[str]:
    return relevant_vars(result.predicate)


def training_error(pred: CnfPredicate, dataset: Dataset) -> int:
    return sum(1 for s, l in dataset.examples if int(eval_predicate(pred, s)) != l)
