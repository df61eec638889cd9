import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invsynth import ir
from invsynth.frontend import ProblemSource, parse_formula, parse_problem
from invsynth.ir import Atom, CnfPredicate, PartialState, eval_formula
from invsynth.relinfer import (FailInd, FailPost, FailPre, FeatureSet, NoSolution, NotVerified, Pass,
                               RelInferConfig, RelInferError, Timeout, UnsatisfiableConflict, bool_combine,
                               bool_combine_clauses, check_vcs, conflict, reachable_within, rel_infer,
                               split_transition_state)
from invsynth.sampler import bootstrap_samples
from invsynth.smt import SmtSession

from .conftest import CORPUS, requires_z3

GE0 = CnfPredicate.single(Atom.geq({"x": 1}, 0))
LE2 = CnfPredicate.single(Atom.geq({"x": -1}, -2))


def pt(**kw):
    return PartialState.of(kw)


def test_conflict_picks_largest_mixed_group():
    pos = [pt(x=0), pt(x=1), pt(x=5)]
    neg = [pt(x=-1), pt(x=3), pt(x=4)]
    p, n = conflict(pos, neg, [GE0])
    # x >= 0 groups {0,1,5 | 3,4}; x < 0 holds only a negative
    assert set(p) == {pt(x=0), pt(x=1), pt(x=5)} and set(n) == {pt(x=3), pt(x=4)}
    assert conflict(pos, neg, [GE0, LE2]) == ([pt(x=5)], [pt(x=3), pt(x=4)])
    assert conflict([pt(x=0)], [pt(x=-1)], [GE0]) == ([], [])


def test_conflict_with_identical_state_is_unsatisfiable():
    with pytest.raises(UnsatisfiableConflict):
        conflict([pt(x=1)], [pt(x=1)], [])


def test_feature_set_rejects_duplicates():
    fs = FeatureSet([GE0])
    with pytest.raises(ValueError):
        fs.add(GE0)
    assert GE0 in fs and len(fs) == 1


def test_bool_combine_interval():
    fs = FeatureSet([GE0, LE2])
    pos = [pt(x=0), pt(x=2)]
    neg = [pt(x=-3), pt(x=7)]
    f = bool_combine(fs, pos, neg)
    assert all(eval_formula(f, s) for s in pos)
    assert not any(eval_formula(f, s) for s in neg)
    assert bool_combine_clauses(fs, pos, []) == []


def test_bool_combine_refuses_unseparated_data():
    with pytest.raises(RelInferError):
        bool_combine_clauses(FeatureSet([GE0]), [pt(x=1)], [pt(x=2)])


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_bool_combine_separates_whatever_the_features_separate(seed):
    rng = random.Random(seed)
    vars = ("a", "b")
    feats = FeatureSet()
    for _ in range(rng.randint(1, 4)):
        f = CnfPredicate.single(Atom.of({v: rng.randint(-2, 2) for v in vars}, rng.randint(-4, 4)))
        if f not in feats:
            feats.add(f)
    states = {PartialState.of({v: rng.randint(-5, 5) for v in vars}) for _ in range(rng.randint(2, 12))}
    pos, neg = [], []
    for s in sorted(states, key=lambda s: s.items):
        (pos if rng.random() < 0.5 else neg).append(s)
    pos_vecs = {feats.vector(s) for s in pos}
    neg = [s for s in neg if feats.vector(s) not in pos_vecs]
    f = bool_combine(feats, pos, neg)
    assert all(eval_formula(f, s) for s in pos)
    assert not any(eval_formula(f, s) for s in neg)


def test_split_transition_state():
    s = PartialState.of({"x": 1, "x'": 2, "y'": 3})
    assert split_transition_state(s, ["x", "y"]) == (pt(x=1), pt(x=2, y=3))


@requires_z3
class TestCheckVcs:
    def test_outcomes_on_working_example(self, working_example, session):
        vars = working_example.vars
        assert isinstance(check_vcs(working_example, parse_formula("(>= i 1)", vars), session), FailPre)
        ind = check_vcs(working_example, parse_formula("(<= i 0)", vars), session)
        assert isinstance(ind, FailInd)
        assert ind.state.get("i") <= 0 and ind.successor.get("i") == ind.state.get("i") + 1
        assert isinstance(check_vcs(working_example, ir.TRUE, session), FailPost)
        good = parse_formula("(and (<= i (+ j k)) (<= i (+ n 1)) (>= k 0))", vars)
        assert isinstance(check_vcs(working_example, good, session), Pass)

    def test_fail_post(self, accumulator, session):
        # x = 0 & y = 0 would pass; y = 0 alone lets x go negative
        f = parse_formula("(= y 0)", accumulator.vars)
        out = check_vcs(accumulator, f, session)
        assert isinstance(out, FailPost) and out.state.get("x") < 0

    def test_undeclared_variable(self, accumulator, session):
        with pytest.raises(ir.IRError):
            check_vcs(accumulator, parse_formula("(>= z 0)", ["z"]), session)

    def test_unknown_is_not_verified(self, accumulator):
        s = SmtSession(["z3", "-in", "-smt2"], timeout_ms=1)
        try:
            hard = parse_formula("(>= (* x x x y y) (* y y y x x))", accumulator.vars)
            out = check_vcs(accumulator, hard, s)
            assert isinstance(out, (NotVerified, FailInd, FailPost, Pass, FailPre))
        finally:
            s.close()


@requires_z3
class TestRelInfer:
    def test_working_example_without_y(self, working_example, session):
        pos, neg = bootstrap_samples(working_example, session)
        events = []
        inv = rel_infer(working_example, pos, neg, ["i", "j", "k"], session, RelInferConfig(tau=60),
                        trace=events.append)
        features = [e["feature"] for e in events if e["event"] == "feature"]
        assert features and not any("y" in f for f in features)
        fresh = SmtSession()
        try:
            assert isinstance(check_vcs(working_example, inv, fresh), Pass)
        finally:
            fresh.close()

    def test_distractors_left_out(self, session):
        p = parse_problem(CORPUS / "growing_sum.inv")
        pos, neg = bootstrap_samples(p, session)
        inv = rel_infer(p, pos, neg, ["x", "y"], session)
        assert ir.free_vars(inv) <= {"x", "y"}
        assert isinstance(check_vcs(p, inv, session), Pass)

    def test_accumulator(self, accumulator, session):
        pos, neg = bootstrap_samples(accumulator, session)
        events = []
        inv = rel_infer(accumulator, pos, neg, ["x", "y"], session, trace=events.append)
        assert isinstance(check_vcs(accumulator, inv, session), Pass)
        assert events[-1]["event"] == "done"

    def test_wrong_variables_cannot_succeed(self, working_example, session):
        pos, neg = bootstrap_samples(working_example, session)
        with pytest.raises((NoSolution, Timeout)):
            rel_infer(working_example, pos, neg, ["y"], session, RelInferConfig(tau=20, max_rounds=40))

    def test_unsafe_problem_has_no_solution(self, session):
        p = parse_problem(ProblemSource.from_text(
            "(vars x) (pre (= x 0)) (trans (= x! (+ x 1))) (post (<= x 3))", "triple-sexp"))
        with pytest.raises((NoSolution, Timeout)):
            rel_infer(p, [pt(x=0)], [pt(x=4)], ["x"], session, RelInferConfig(tau=20, max_rounds=40))

    def test_pre_violating_post_is_reported_at_once(self, session):
        p = parse_problem(ProblemSource.from_text(
            "(vars x) (pre (= x 5)) (trans (= x! x)) (post (<= x 3))", "triple-sexp"))
        with pytest.raises(NoSolution, match="precondition"):
            rel_infer(p, [], [], ["x"], session)

    def test_empty_relevant_set(self, accumulator, session):
        with pytest.raises(RelInferError):
            rel_infer(accumulator, [], [], [], session)

    def test_reachable_within(self, working_example, session):
        assert session.is_sat(reachable_within(working_example, pt(i=2, j=2), 2)) is True
        assert session.is_sat(reachable_within(working_example, pt(i=3, j=3), 2)) is False
        assert session.is_sat(reachable_within(working_example, pt(i=1, j=0), 4)) is False


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_learned_feature_splits_its_conflict_group(seed):
    from invsynth.learner import Dataset, NoSeparator, learn
    rng = random.Random(seed)
    vars = ("a", "b")
    states = list({PartialState.of({v: rng.randint(-6, 6) for v in vars}) for _ in range(8)})
    pos = [s for s in states if rng.random() < 0.5]
    neg = [s for s in states if s not in pos]
    fs = FeatureSet()
    while True:
        P, N = conflict(pos, neg, fs)
        if not P:
            break
        try:
            feature = learn(Dataset.from_lists(P, N, vars)).predicate
        except NoSeparator:
            return
        assert all(ir.eval_predicate(feature, p) for p in P)
        assert not any(ir.eval_predicate(feature, n) for n in N)
        fs.add(feature)
    f = bool_combine(fs, pos, neg)
    assert all(eval_formula(f, s) for s in pos) and not any(eval_formula(f, s) for s in neg)
