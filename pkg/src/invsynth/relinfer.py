"""Invariant strengthening over a fixed set of relevant variables.

Starting from ``I = Post``, the loop repeatedly learns small features that
separate conflicting positive and negative states, combines them into a
strengthening ``delta`` with a greedy CNF learner and checks whether
``delta & I`` is preserved by the transition. States from which the
transition breaks ``I`` become negatives, unless they must be kept anyway
(a short bounded search shows them reachable, or they agree with a positive
on every relevant variable). Then their successors become positives and ``I``
starts over. Once a ``delta`` works, ``I`` is
strengthened. If the precondition no longer implies ``I``, the offending state
becomes a positive and ``I`` starts over from ``Post``.

Features are learned only over the given relevant variables.
"""

from __future__ import annotations

import itertools
import json
import logging
import time
from dataclasses import dataclass, field, replace
from typing import IO, Callable, Generator, Iterable, Sequence

from . import ir
from .ir import CnfPredicate, Formula, PartialState, VcProblem, eval_predicate
from .learner import Dataset, LearnerConfig, LearnTimeout, NoSeparator, learn
from .sampler import reachable_formula
from .smt import Counterexample, SmtSession, Unknown, Valid

log = logging.getLogger(__name__)

DEFAULT_MAX_ROUNDS = 200
MAX_CLAUSE_WIDTH = 3
DEFAULT_SCREEN_DEPTH = 4


class RelInferError(Exception):
    pass


class NoSolution(RelInferError):
    """No invariant can be found over these variables from this data."""


class Timeout(RelInferError):
    pass


class UnsatisfiableConflict(RelInferError):
    """A positive and a negative state are identical, so no feature separates them."""

    def __init__(self, state: PartialState):
        super().__init__(f"state {state} is both positive and negative")
        self.state = state


# ---------------------------------------------------------------------------
# VC checking

@dataclass(frozen=True)
class Pass:
    pass


@dataclass(frozen=True)
class FailPre:
    state: PartialState


@dataclass(frozen=True)
class FailInd:
    state: PartialState
    successor: PartialState


@dataclass(frozen=True)
class FailPost:
    state: PartialState


@dataclass(frozen=True)
class NotVerified:
    reason: str


VcOutcome = Pass | FailPre | FailInd | FailPost | NotVerified


def split_transition_state(state: PartialState, vars: Sequence[str]) -> tuple[PartialState, PartialState]:
    """Separate a model over ``x`` and ``x'`` into the two states."""
    primes = {ir.primed(v): v for v in vars}
    plain = set(vars)
    before = PartialState.of((k, v) for k, v in state.items if k in plain)
    after = PartialState.of((primes[k], v) for k, v in state.items if k in primes)
    return before, after


def check_vcs(problem: VcProblem, candidate: Formula, session: SmtSession) -> VcOutcome:
    """Pre => I, then I & Trans => I', then I => Post; the first failure wins."""
    extra = ir.free_vars(candidate) - set(problem.vars)
    if extra:
        raise ir.IRError(f"candidate mentions undeclared variable(s): {', '.join(sorted(extra))}")
    res = session.check_valid(ir.implies(problem.pre, candidate))
    if isinstance(res, Unknown):
        return NotVerified(f"pre: {res.reason}")
    if isinstance(res, Counterexample):
        return FailPre(res.state)
    res = session.check_valid(ir.implies(ir.conj(candidate, problem.trans), ir.prime(candidate, problem.vars)))
    if isinstance(res, Unknown):
        return NotVerified(f"ind: {res.reason}")
    if isinstance(res, Counterexample):
        return FailInd(*split_transition_state(res.state, problem.vars))
    res = session.check_valid(ir.implies(candidate, problem.post))
    if isinstance(res, Unknown):
        return NotVerified(f"post: {res.reason}")
    if isinstance(res, Counterexample):
        return FailPost(res.state)
    return Pass()


# ---------------------------------------------------------------------------
# features, conflicts and Boolean combination

class FeatureSet:
    """Ordered features without syntactic duplicates."""

    def __init__(self, features: Iterable[CnfPredicate] = ()):
        self.features: list[CnfPredicate] = []
        for f in features:
            self.add(f)

    def add(self, feature: CnfPredicate) -> None:
        if feature in self.features:
            raise ValueError(f"duplicate feature {feature}")
        self.features.append(feature)

    def __contains__(self, feature) -> bool:
        return feature in self.features

    def __iter__(self):
        return iter(self.features)

    def __len__(self) -> int:
        return len(self.features)

    def __getitem__(self, i: int) -> CnfPredicate:
        return self.features[i]

    def vector(self, state: PartialState) -> tuple[bool, ...]:
        return tuple(eval_predicate(f, state) for f in self.features)


def conflict(positives: Sequence[PartialState], negatives: Sequence[PartialState],
             features: FeatureSet | Sequence[CnfPredicate]) -> tuple[list[PartialState], list[PartialState]]:
    """The largest group of states that the features cannot tell apart and that has both labels."""
    fs = features if isinstance(features, FeatureSet) else FeatureSet(features)
    groups: dict[tuple[bool, ...], tuple[list, list]] = {}
    for s in positives:
        groups.setdefault(fs.vector(s), ([], []))[0].append(s)
    for s in negatives:
        groups.setdefault(fs.vector(s), ([], []))[1].append(s)
    mixed = [(vec, p, n) for vec, (p, n) in groups.items() if p and n]
    if not mixed:
        return [], []
    vec, p, n = min(mixed, key=lambda g: (-(len(g[1]) + len(g[2])), g[0]))
    clash = set(p) & set(n)
    if clash:
        raise UnsatisfiableConflict(min(clash, key=lambda s: s.items))
    return p, n


@dataclass(frozen=True)
class Literal:
    feature: int
    positive: bool


def _literal_masks(fs: FeatureSet, states: Sequence[PartialState]) -> list[int]:
    """Bitmask per literal (feature i positive at 2i, negated at 2i+1) of the states it holds on."""
    masks = []
    vecs = [fs.vector(s) for s in states]
    for i in range(len(fs)):
        on = sum(1 << k for k, v in enumerate(vecs) if v[i])
        off = sum(1 << k for k, v in enumerate(vecs) if not v[i])
        masks.extend([on, off])
    return masks


def bool_combine_clauses(features: FeatureSet, positives: Sequence[PartialState],
                         negatives: Sequence[PartialState], max_width: int = MAX_CLAUSE_WIDTH
                         ) -> list[tuple[Literal, ...]]:
    """Greedy CNF over feature literals: true on every positive, false on every negative."""
    fs = features
    if not negatives:
        return []
    pos_masks = _literal_masks(fs, positives)
    neg_masks = _literal_masks(fs, negatives)
    all_pos = (1 << len(positives)) - 1
    remaining = (1 << len(negatives)) - 1
    n_lits = 2 * len(fs)
    clauses: list[tuple[Literal, ...]] = []
    while remaining:
        best = None
        for width in range(1, min(max_width, n_lits) + 1):
            for combo in itertools.combinations(range(n_lits), width):
                if any(combo[a] // 2 == combo[a + 1] // 2 for a in range(width - 1)):
                    continue  # f | not f is a tautology
                cover_pos = 0
                cover_neg = 0
                for lit in combo:
                    cover_pos |= pos_masks[lit]
                    cover_neg |= neg_masks[lit]
                if cover_pos != all_pos:
                    continue
                excluded = remaining & ~cover_neg
                gain = bin(excluded).count("1")
                if gain and (best is None or gain > best[0]):
                    best = (gain, combo, excluded)
        if best is None:
            break
        _, combo, excluded = best
        clauses.append(tuple(Literal(lit // 2, lit % 2 == 0) for lit in combo))
        remaining &= ~excluded
    # anything left is excluded by a clause built from its own feature vector
    pos_vecs = [fs.vector(p) for p in positives]
    for k, nst in enumerate(negatives):
        if not (remaining >> k) & 1:
            continue
        vec = fs.vector(nst)
        if vec in pos_vecs:
            raise RelInferError("features do not separate the data; conflict loop was not discharged")
        clauses.append(tuple(Literal(i, not v) for i, v in enumerate(vec)))
        for k2 in range(k, len(negatives)):
            if (remaining >> k2) & 1 and fs.vector(negatives[k2]) == vec:
                remaining &= ~(1 << k2)
    return clauses


def clauses_to_formula(features: FeatureSet, clauses: Sequence[tuple[Literal, ...]]) -> Formula:
    def lit(l: Literal) -> Formula:
        f = features[l.feature].to_formula()
        return f if l.positive else ir.neg(f)
    return ir.conj(*(ir.disj(*(lit(l) for l in c)) for c in clauses))


def bool_combine(features: FeatureSet, positives: Sequence[PartialState], negatives: Sequence[PartialState]
                 ) -> Formula:
    return clauses_to_formula(features, bool_combine_clauses(features, positives, negatives))


# ---------------------------------------------------------------------------
# the strengthening loop

@dataclass
class RelInferConfig:
    tau: float = 60.0
    max_rounds: int = DEFAULT_MAX_ROUNDS
    screen_depth: int = DEFAULT_SCREEN_DEPTH
    learner: LearnerConfig = field(default_factory=LearnerConfig)


class _Tracer:
    def __init__(self, sink: IO[str] | Callable[[dict], None] | None):
        self.sink = sink

    def __call__(self, event: str, **data) -> None:
        if self.sink is None:
            return
        rec = {"event": event, **data}
        if callable(self.sink):
            self.sink(rec)
        else:
            self.sink.write(json.dumps(rec, sort_keys=True) + "\n")


def rel_infer_steps(problem: VcProblem, positives: Iterable[PartialState], negatives: Iterable[PartialState],
                    relevant: Iterable[str], session: SmtSession, config: RelInferConfig | None = None,
                    fresh_session: Callable[[], SmtSession] | None = None,
                    trace: IO[str] | Callable[[dict], None] | None = None,
                    counters: dict | None = None) -> Generator[None, None, Formula]:
    """Generator form of :func:`rel_infer`; yields after every solver or ILP call."""
    config = config or RelInferConfig()
    relevant = [v for v in problem.vars if v in set(relevant)]
    if not relevant:
        raise RelInferError("relevant variable set must be nonempty")
    deadline = time.monotonic() + config.tau
    emit = _Tracer(trace)
    counters = counters if counters is not None else {}
    counters.setdefault("ilp_solves", 0)

    def out_of_time() -> bool:
        return time.monotonic() > deadline

    res = session.check_valid(ir.implies(problem.pre, problem.post))
    yield
    if isinstance(res, Counterexample):
        raise NoSolution(f"precondition does not imply postcondition, e.g. {res.state}")

    pos_all: list[PartialState] = list(dict.fromkeys(positives))
    neg_base: list[PartialState] = list(dict.fromkeys(negatives))
    features = FeatureSet()
    inv_parts: list[Formula] = []
    rounds = 0

    def current() -> Formula:
        parts: list[Formula] = [problem.post]
        for d in inv_parts:
            for c in (d.args if isinstance(d, ir.And) else (d,)):
                if c not in parts:
                    parts.append(c)
        return ir.conj(*parts)

    while True:
        if out_of_time():
            raise Timeout("relevance-aware inference ran out of time")
        inv = current()
        res = session.check_valid(ir.implies(ir.conj(inv, problem.trans), ir.prime(inv, problem.vars)))
        yield
        if isinstance(res, Valid):
            break
        negs = list(neg_base)
        reset = False
        while True:
            rounds += 1
            if rounds > config.max_rounds:
                raise Timeout(f"iteration cap of {config.max_rounds} reached")
            if out_of_time():
                raise Timeout("relevance-aware inference ran out of time")
            # discharge every conflict with a new feature
            while True:
                try:
                    P, N = conflict(pos_all, negs, features)
                except UnsatisfiableConflict as e:
                    raise NoSolution(str(e)) from None
                if not P:
                    break
                emit("conflict", pos=len(P), neg=len(N))
                cfg = config.learner
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise Timeout("relevance-aware inference ran out of time")
                if cfg.time_limit is None or cfg.time_limit > remaining:
                    cfg = replace(cfg, time_limit=remaining)
                try:
                    counters["ilp_solves"] += 1
                    feature = learn(Dataset.from_lists(P, N, problem.vars), relevant, cfg).predicate
                except NoSeparator as e:
                    raise NoSolution(f"no feature over {{{', '.join(relevant)}}}: {e}") from None
                except LearnTimeout as e:
                    if e.incumbent is None:
                        raise Timeout(str(e)) from None
                    feature = e.incumbent.predicate
                yield
                features.add(feature)
                emit("feature", feature=str(feature))
            clauses = bool_combine_clauses(features, pos_all, negs)
            delta = clauses_to_formula(features, clauses)
            emit("delta", delta=_show(delta), clauses=len(clauses))
            res = session.check_valid(ir.implies(ir.conj(delta, inv, problem.trans), ir.prime(inv, problem.vars)))
            yield
            if isinstance(res, Counterexample):
                before, after = split_transition_state(res.state, problem.vars)
                # Post holds on before, and any delta over the relevant variables agrees with
                # a positive of the same projection, so every answer of this shape keeps it
                view = ir.project(before, relevant)
                known = any(ir.project(p, relevant) == view for p in pos_all)
                if not known and config.screen_depth >= 0:
                    known = session.is_sat(reachable_within(problem, before, config.screen_depth)) is True
                    yield
                    if known:
                        emit("screened", state=str(before))
                        pos_all.append(before)
                if known:
                    # a state every answer keeps leaves I, so its successor must be kept too
                    if not inv_parts:
                        raise NoSolution(f"{before} must be kept but steps to {after}, which violates Post")
                    emit("reachable-escape", state=str(before), successor=str(after))
                    if after not in pos_all:
                        pos_all.append(after)
                    inv_parts.clear()
                    reset = True
                    break
                emit("cex", state=str(before))
                if before in negs:
                    raise NoSolution(f"counterexample {before} repeats; features cannot exclude it")
                negs.append(before)
                continue
            if isinstance(res, Unknown):
                log.info("strengthening check unknown (%s); accepting delta", res.reason)
            break
        if reset:
            continue
        inv_parts.append(delta)
        res = session.check_valid(ir.implies(problem.pre, current()))
        yield
        if isinstance(res, Counterexample):
            state = ir.project(res.state, problem.vars)
            emit("reset", state=str(state))
            inv_parts.clear()
            if state not in pos_all:
                pos_all.append(state)
        elif isinstance(res, Unknown):
            raise Timeout(f"precondition check unknown ({res.reason})")

    inv = current()
    checker = fresh_session() if fresh_session is not None else None
    try:
        verdict = check_vcs(problem, inv, checker or session)
    finally:
        if checker is not None:
            checker.close()
    yield
    if not isinstance(verdict, Pass):
        raise NoSolution(f"candidate failed the independent check: {verdict}")
    emit("done", invariant=_show(inv))
    return inv


def reachable_within(problem: VcProblem, state: PartialState, depth: int) -> Formula:
    """Some run of at most ``depth`` steps from Pre ends in ``state`` (on its bound coordinates)."""
    cases = []
    for k in range(depth + 1):
        at = [ir.Cmp("=", ir.Var(ir.step_name(v, k)), ir.Const(c)) for v, c in state.items]
        cases.append(ir.conj(reachable_formula(problem, k), *at))
    return ir.disj(*cases)


def _show(f: Formula) -> str:
    from .frontend import to_smtlib
    return to_smtlib(f)


def rel_infer(problem: VcProblem, positives: Iterable[PartialState], negatives: Iterable[PartialState],
              relevant: Iterable[str], session: SmtSession, config: RelInferConfig | None = None,
              fresh_session: Callable[[], SmtSession] | None = None,
              trace: IO[str] | Callable[[dict], None] | None = None) -> Formula:
    """Find an inductive invariant implying Post using features over ``relevant`` only."""
    gen = rel_infer_steps(problem, positives, negatives, relevant, session, config, fresh_session, trace)
    while True:
        try:
            next(gen)
        except StopIteration as stop:
            return stop.value
