import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invsynth import ir
from invsynth.frontend import (ParseError, ProblemSource, detect_dialect, parse_formula, parse_problem,
                               render_invariant, render_problem, to_smtlib)
from invsynth.ir import Atom, CnfPredicate, PartialState, eval_formula

from .conftest import CORPUS, WORKING_VARS, requires_z3


def parse_text(text, dialect=None):
    return parse_problem(ProblemSource.from_text(text, dialect))


def test_working_example_parses_with_declared_order(working_example):
    assert working_example.vars == WORKING_VARS
    assert working_example.name == "counter_sum"
    assert eval_formula(working_example.pre, dict(i=0, j=0, k=3, n=2, y=7))
    assert not eval_formula(working_example.pre, dict(i=0, j=1, k=3, n=2, y=7))


def test_accumulator_with_literal_false_post():
    p = parse_text("(vars x y) (pre (and (= x 0) (= y 0)))"
                   " (trans (and (>= x 0) (= x! (+ x y)) (= y! y))) (post false)")
    assert p.vars == ("x", "y")
    assert p.post == ir.FALSE
    assert ir.free_vars(p.trans) == {"x", "y", "x'", "y'"}


def test_both_prime_spellings_are_accepted():
    a = parse_text("(vars x) (pre (= x 0)) (trans (= x! (+ x 1))) (post true)")
    b = parse_text("(vars x) (pre (= x 0)) (trans (= |x'| (+ x 1))) (post true)")
    assert a.trans == b.trans


@pytest.mark.parametrize("text, code", [
    ("(vars) (pre true) (trans true) (post true)", "empty-vars"),
    ("(vars x) (pre true) (trans true)", "missing"),
    ("(vars x) (pre (= y 0)) (trans true) (post true)", "unknown-symbol"),
    ("(vars x) (pre (forall ((z Int)) (= z x))) (trans true) (post true)", "unsupported"),
    ("(vars x) (pre (select a x)) (trans true) (post true)", "unsupported"),
    ("(vars x) (pre (= x 1.5)) (trans true) (post true)", "unsupported"),
    ("(vars x) (pre (+ x 1)) (trans true) (post true)", "sort"),
    ("(vars x) (pre (= x! 0)) (trans true) (post true)", "unknown-symbol"),
])
def test_rejections_carry_a_code(text, code):
    with pytest.raises(ParseError) as exc:
        parse_text(text)
    assert exc.value.code == code


def test_syntax_error_is_located():
    with pytest.raises(ParseError) as exc:
        parse_text("(vars x)\n(pre (= x 0)\n")
    assert exc.value.line >= 1
    assert exc.value.to_dict()["error"] == "syntax"


def test_dialect_detection():
    assert detect_dialect("", ".sl") == "sygus-inv"
    assert detect_dialect("(synth-inv inv-f ((x Int)))") == "sygus-inv"
    assert detect_dialect("(vars x)") == "triple-sexp"


def test_sygus_file_matches_triple_rendering():
    p = parse_problem(CORPUS / "lockstep.sl")
    again = parse_text(render_problem(p, "triple-sexp"))
    assert (again.vars, again.pre, again.trans, again.post) == (p.vars, p.pre, p.trans, p.post)


@pytest.mark.parametrize("name", sorted(x.name for x in CORPUS.iterdir() if x.suffix in (".inv", ".sl")))
def test_corpus_round_trips_through_both_dialects(name):
    p = parse_problem(CORPUS / name)
    for dialect in ("triple-sexp", "sygus-inv"):
        q = parse_text(render_problem(p, dialect), dialect)
        assert (q.vars, q.pre, q.trans, q.post) == (p.vars, p.pre, p.trans, p.post)


def test_sygus_arity_mismatch_is_rejected():
    text = render_problem(parse_problem(CORPUS / "lockstep.sl"), "sygus-inv")
    text = text.replace("(define-fun post-f ((x Int) (y Int))", "(define-fun post-f ((x Int))")
    with pytest.raises(ParseError):
        parse_text(text.replace("(= x y)", "(= x 0)"), "sygus-inv")


def test_render_paper_candidate():
    pred = CnfPredicate(((Atom.geq({"i": 1}, 0),), (Atom.geq({"j": 1, "i": -1}, 0),), (Atom.geq({"k": 1}, 0),)))
    assert render_invariant(pred, WORKING_VARS) == (
        "(define-fun inv-f ((i Int) (j Int) (k Int) (n Int) (y Int)) Bool (and (>= i 0) (<= i j) (>= k 0)))")


def test_render_true_and_bad_vars():
    assert render_invariant(CnfPredicate.true(), ("x",), "smtlib-term") == "true"
    with pytest.raises(ValueError):
        render_invariant(CnfPredicate.single(Atom.of({"z": 1}, 0)), ("x",))
    with pytest.raises(ValueError):
        render_invariant(CnfPredicate.true(), ("x",), "json")


VARS = ("a", "b", "c")
atoms = st.builds(lambda cs, b: Atom.of(dict(zip(VARS, cs)), b),
                  st.lists(st.integers(-4, 4), min_size=3, max_size=3), st.integers(-9, 9))
cnfs = st.lists(st.lists(atoms, min_size=1, max_size=3).map(tuple), max_size=3).map(
    lambda cl: CnfPredicate(tuple(cl)))


@given(cnfs, st.lists(st.integers(-30, 30), min_size=3, max_size=3))
def test_rendered_text_parses_back_to_the_same_function(pred, vals):
    text = render_invariant(pred, VARS, "smtlib-term")
    back = parse_formula(text, VARS)
    env = dict(zip(VARS, vals))
    assert eval_formula(back, env) == eval_formula(pred.to_formula(), env)


@requires_z3
def test_round_trip_equivalence_is_valid(session):
    rng = random.Random(7)
    for _ in range(50):
        clauses = []
        for _ in range(rng.randint(1, 3)):
            clauses.append(tuple(Atom.of({v: rng.randint(-3, 3) for v in VARS}, rng.randint(-5, 5))
                                 for _ in range(rng.randint(1, 2))))
        pred = CnfPredicate(tuple(clauses))
        back = parse_formula(render_invariant(pred, VARS, "smtlib-term"), VARS)
        f = pred.to_formula()
        assert session.check_valid(ir.conj(ir.implies(f, back), ir.implies(back, f))) == session.check_valid(ir.TRUE)


def test_negative_literals_render_in_smtlib_form():
    f = ir.Cmp(">=", ir.Var("x"), ir.Const(-3))
    assert to_smtlib(f) == "(>= x (- 3))"
    assert parse_formula(to_smtlib(f), ["x"]) is not None
