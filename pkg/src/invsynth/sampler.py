"""Labeled states from the solver: bootstrap samples and bounded-unrolling refinement.

Positive states come from ``Reachable(k)`` (``k`` transitions from the
precondition). Negative states come from ``Bad(k)`` (``k`` transitions ending
in a postcondition violation). Both families are monotone in ``k``. Once depth
``k`` has no path, neither has any deeper one, so the search stops there and
never asks again.

The ``*_steps`` functions are generators that yield after every solver query,
so a scheduler can interleave them with other work and cancel them between
queries. The plain functions run them to completion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Generator, Iterable

from . import ir
from .ir import CnfPredicate, Formula, PartialState, VcProblem
from .smt import Counterexample, Sat, SmtSession, Unknown, Unsat

log = logging.getLogger(__name__)

DEFAULT_K_MAX = 50
DEFAULT_PER_CLASS = 8

POS = "pos"
NEG = "neg"


class BootstrapFailed(Exception):
    pass


def reachable_formula(problem: VcProblem, k: int) -> Formula:
    """Pre at step 0 followed by ``k`` transitions."""
    parts = [ir.index_steps(problem.pre, problem.vars, 0)]
    parts += [ir.index_steps(problem.trans, problem.vars, t) for t in range(k)]
    return ir.conj(*parts)


def bad_formula(problem: VcProblem, k: int) -> Formula:
    """``k`` transitions from step 0 ending in a state violating Post."""
    parts = [ir.index_steps(problem.trans, problem.vars, t) for t in range(k)]
    parts.append(ir.index_steps(ir.neg(problem.post), problem.vars, k))
    return ir.conj(*parts)


def state_at(state: PartialState, vars: Iterable[str], step: int) -> PartialState:
    """The step-``step`` slice of an unrolled model, with plain variable names."""
    names = {ir.step_name(v, step): v for v in vars}
    return PartialState.of((names[k], v) for k, v in state.items if k in names)


@dataclass
class UnrollCache:
    """Per-direction record of which depths have a path at all."""

    direction: str
    verdicts: dict[int, str] = field(default_factory=dict)
    formulas: dict[int, Formula] = field(default_factory=dict)

    @property
    def unsat_depths(self) -> set[int]:
        return {k for k, v in self.verdicts.items() if v == "unsat"}

    def exhausted_at(self, k: int) -> bool:
        """True when some depth <= k is known to have no path."""
        return any(d <= k for d in self.unsat_depths)

    def formula(self, problem: VcProblem, k: int) -> Formula:
        if k not in self.formulas:
            build = reachable_formula if self.direction == POS else bad_formula
            self.formulas[k] = build(problem, k)
        return self.formulas[k]


def _path_check(problem, cache: UnrollCache, session: SmtSession, k: int):
    """Generator: make sure ``cache`` knows whether depth ``k`` has a path."""
    if k in cache.verdicts and cache.verdicts[k] != "unknown":
        return
    res = session.get_model(cache.formula(problem, k))
    cache.verdicts[k] = "sat" if isinstance(res, Sat) else "unsat" if isinstance(res, Unsat) else "unknown"
    yield


def find_pos_steps(problem: VcProblem, classifier: CnfPredicate, session: SmtSession,
                   k_max: int = DEFAULT_K_MAX, cache: UnrollCache | None = None
                   ) -> Generator[None, None, PartialState | None]:
    """Search for a reachable state the classifier rejects."""
    cache = cache if cache is not None else UnrollCache(POS)
    goal = classifier.to_formula()
    for k in range(k_max + 1):
        if cache.exhausted_at(k):
            return None
        yield from _path_check(problem, cache, session, k)
        if cache.verdicts[k] == "unsat":
            return None
        res = session.check_valid(ir.implies(cache.formula(problem, k), ir.index_steps(goal, problem.vars, k)))
        yield
        if isinstance(res, Counterexample):
            return state_at(res.state, problem.vars, k)
        if isinstance(res, Unknown):
            log.info("positive search: depth %d unknown (%s)", k, res.reason)
    return None


def find_neg_steps(problem: VcProblem, classifier: CnfPredicate, session: SmtSession,
                   k_max: int = DEFAULT_K_MAX, cache: UnrollCache | None = None
                   ) -> Generator[None, None, PartialState | None]:
    """Search for a state the classifier accepts that reaches a violation."""
    cache = cache if cache is not None else UnrollCache(NEG)
    goal = ir.neg(classifier.to_formula())
    for k in range(k_max + 1):
        if cache.exhausted_at(k):
            return None
        yield from _path_check(problem, cache, session, k)
        if cache.verdicts[k] == "unsat":
            return None
        res = session.check_valid(ir.implies(cache.formula(problem, k), ir.index_steps(goal, problem.vars, 0)))
        yield
        if isinstance(res, Counterexample):
            return state_at(res.state, problem.vars, 0)
        if isinstance(res, Unknown):
            log.info("negative search: depth %d unknown (%s)", k, res.reason)
    return None


def run_steps(gen: Generator):
    """Drive a step generator to completion and return its result."""
    while True:
        try:
            next(gen)
        except StopIteration as stop:
            return stop.value


def find_pos_counterexample(problem: VcProblem, classifier: CnfPredicate, session: SmtSession,
                            k_max: int = DEFAULT_K_MAX, cache: UnrollCache | None = None) -> PartialState | None:
    return run_steps(find_pos_steps(problem, classifier, session, k_max, cache))


def find_neg_counterexample(problem: VcProblem, classifier: CnfPredicate, session: SmtSession,
                            k_max: int = DEFAULT_K_MAX, cache: UnrollCache | None = None) -> PartialState | None:
    return run_steps(find_neg_steps(problem, classifier, session, k_max, cache))


def _draw(session: SmtSession, formula: Formula, count: int, keep, rename) -> tuple[list[PartialState], bool]:
    """Up to ``count`` models distinct on the ``keep`` coordinates; flag is True if any query was decided."""
    raw: list[PartialState] = []
    out: list[PartialState] = []
    decided = False
    for _ in range(count):
        res = session.get_model(formula, raw)
        if isinstance(res, Unknown):
            break
        decided = True
        if isinstance(res, Unsat):
            break
        kept = ir.project(res.state, keep)
        raw.append(kept)
        state = PartialState.of((rename[k], v) for k, v in kept.items)
        if state not in out:
            out.append(state)
    return out, decided


def bootstrap_samples(problem: VcProblem, session: SmtSession, per_class: int = DEFAULT_PER_CLASS
                      ) -> tuple[list[PartialState], list[PartialState]]:
    """Initial positives and negatives, ``per_class`` split across the two sources of each."""
    if per_class < 1:
        raise ValueError("per_class must be at least 1")
    first = (per_class + 1) // 2
    second = per_class - first
    plain = {v: v for v in problem.vars}
    from_primed = {ir.primed(v): v for v in problem.vars}

    pos_a, da = _draw(session, problem.pre, first, problem.vars, plain)
    pos_b, db = _draw(session, ir.conj(problem.pre, problem.trans), second, list(from_primed), from_primed)
    neg_a, dc = _draw(session, ir.neg(problem.post), first, problem.vars, plain)
    neg_b, dd = _draw(session, ir.conj(ir.neg(problem.post_primed()), problem.trans), second, problem.vars, plain)

    positives = _dedupe(pos_a + pos_b)
    negatives = _dedupe(neg_a + neg_b)
    if not positives and not negatives:
        why = "solver returned unknown on every source" if not (da or db or dc or dd) else "no samples exist"
        raise BootstrapFailed(why)
    return positives, negatives


def _dedupe(states: list[PartialState]) -> list[PartialState]:
    out: list[PartialState] = []
    for s in states:
        if s not in out:
            out.append(s)
    return out
