import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from invsynth import ilp
from invsynth.ilp import (CONTINUOUS, INTEGER, Feasible, IlpModel, IlpModelError, Infeasible, Optimal,
                          ResourceLimit, check_assignment, exact_lp, export_lp, solve)

from .oracles import enumerate_model, random_model


def knapsack():
    m = IlpModel("knap")
    for name in "abc":
        m.add_binary(name)
    m.add_constraint({"a": 3, "b": 4, "c": 5}, "<=", 8)
    m.set_objective({"a": -4, "b": -5, "c": -6})
    return m


def test_knapsack_optimum():
    out = solve(knapsack())
    assert isinstance(out, Optimal)
    assert out.objective == -10
    assert out.assignment == {"a": 1, "b": 0, "c": 1}


def test_feasibility_without_objective():
    m = IlpModel()
    m.add_var("x", INTEGER, -5, 5)
    m.add_var("y", INTEGER, -5, 5)
    m.add_constraint({"x": 2, "y": 2}, "=", 3)
    assert isinstance(solve(m), Infeasible)
    m2 = IlpModel()
    m2.add_var("x", INTEGER, -5, 5)
    m2.add_constraint({"x": 3}, ">=", 4)
    out = solve(m2)
    assert isinstance(out, Feasible) and out.assignment["x"] >= 2


def test_mixed_integer_leaf_is_exact():
    m = IlpModel()
    m.add_var("n", INTEGER, 0, 10)
    m.add_var("t", CONTINUOUS, 0, None)
    m.add_constraint({"t": 3, "n": -1}, ">=", Fraction(1, 2))
    m.add_constraint({"n": 1}, ">=", 2)
    m.set_objective({"t": 1, "n": Fraction(1, 7)})
    out = solve(m)
    assert isinstance(out, Optimal)
    assert out.assignment["n"] == 2 and out.assignment["t"] == Fraction(5, 6)
    assert out.objective == Fraction(5, 6) + Fraction(2, 7)


def test_model_errors():
    m = IlpModel()
    with pytest.raises(IlpModelError):
        m.add_var("x", INTEGER, 0, None)
    m.add_var("x", INTEGER, 0, 1)
    with pytest.raises(IlpModelError):
        m.add_var("x", INTEGER, 0, 1)
    with pytest.raises(IlpModelError):
        m.add_var("z", "binary", 0, 1)
    with pytest.raises(IlpModelError):
        m.add_constraint({"x": 1}, "<", 1)
    with pytest.raises(IlpModelError):
        m.add_constraint({"nope": 1}, "<=", 1)


def test_unbounded_relaxation_with_objective_is_a_model_error():
    m = IlpModel()
    m.add_var("t", CONTINUOUS, None, None)
    m.set_objective({"t": 1})
    with pytest.raises(IlpModelError):
        solve(m)


def test_node_limit_returns_incumbent():
    rng = random.Random(11)
    m = IlpModel("big")
    n = 14
    for j in range(n):
        m.add_binary(f"x{j}")
    w = [rng.randint(10, 40) for _ in range(n)]
    m.add_constraint({f"x{j}": w[j] for j in range(n)}, "<=", sum(w) // 2)
    m.set_objective({f"x{j}": -rng.randint(10, 40) for j in range(n)})
    out = solve(m, node_limit=3)
    assert isinstance(out, (ResourceLimit, Optimal))
    if isinstance(out, ResourceLimit):
        assert out.incumbent is None or check_assignment(m, out.incumbent)
        full = solve(m)
        assert isinstance(full, Optimal)


def test_random_models_match_enumeration():
    rng = random.Random(2024)
    for _ in range(120):
        m = random_model(rng)
        feasible, best = enumerate_model(m)
        out = solve(m)
        assert isinstance(out, (Optimal, Feasible)) == feasible
        if feasible:
            assert check_assignment(m, out.assignment)
            if m.objective is not None:
                assert isinstance(out, Optimal) and out.objective == best


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_solutions_are_exactly_feasible(seed):
    m = random_model(random.Random(seed))
    out = solve(m, use_relaxation=seed % 2 == 0)
    feasible, best = enumerate_model(m)
    assert isinstance(out, (Optimal, Feasible)) == feasible
    if feasible:
        assert check_assignment(m, out.assignment)


def test_exact_lp_agrees_with_highs():
    rng = random.Random(5)
    checked = 0
    for _ in range(80):
        n = rng.randint(1, 4)
        c = [Fraction(rng.randint(-5, 5)) for _ in range(n)]
        rows = []
        for _ in range(rng.randint(1, 4)):
            rows.append(([Fraction(rng.randint(-3, 3)) for _ in range(n)], rng.choice(("<=", ">=", "=")),
                         Fraction(rng.randint(-5, 5))))
        lb = [Fraction(rng.randint(-5, 0)) for _ in range(n)]
        ub = [lo + rng.randint(0, 6) for lo in lb]
        status, x, value = exact_lp(c, rows, lb, ub)
        a_ub, b_ub, a_eq, b_eq = [], [], [], []
        for coef, rel, rhs in rows:
            row = [float(v) for v in coef]
            if rel == "<=":
                a_ub.append(row), b_ub.append(float(rhs))
            elif rel == ">=":
                a_ub.append([-v for v in row]), b_ub.append(-float(rhs))
            else:
                a_eq.append(row), b_eq.append(float(rhs))
        ref = linprog([float(v) for v in c], A_ub=a_ub or None, b_ub=b_ub or None, A_eq=a_eq or None,
                      b_eq=b_eq or None, bounds=list(zip(map(float, lb), map(float, ub))), method="highs")
        if ref.status == 2:
            assert status == "infeasible"
        elif ref.status == 0:
            assert status == "optimal"
            assert abs(float(value) - ref.fun) < 1e-7
            for coef, rel, rhs in rows:
                lhs = sum(a * v for a, v in zip(coef, x))
                assert (lhs <= rhs) if rel == "<=" else (lhs >= rhs) if rel == ">=" else lhs == rhs
            checked += 1
    assert checked > 20


def test_exact_lp_detects_unboundedness():
    status, _, _ = exact_lp([Fraction(-1)], [([Fraction(1)], ">=", Fraction(0))], [None], [None])
    assert status == "unbounded"


def test_export_lp_layout():
    m = IlpModel("demo model")
    m.add_var("x[1]", INTEGER, 0, 5)
    m.add_var("x_1", INTEGER, -2, 2)
    m.add_var("t", CONTINUOUS, None, None)
    for j in range(10):
        m.add_binary(f"b{j}")
    m.add_constraint({"x[1]": 2, "x_1": -1, "t": Fraction(1, 2)}, ">=", 3, "first")
    m.add_constraint({f"b{j}": 1 for j in range(10)}, "<=", 4, "card")
    m.set_objective({"x[1]": 1, "t": 1})
    text = export_lp(m)
    lines = text.splitlines()
    assert lines[0].startswith("\\")
    for section in ("Minimize", "Subject To", "Bounds", "General", "End"):
        assert section in lines
    assert " t free" in lines
    bounded = [ln.split()[2] for ln in lines if ln.count("<=") == 2]
    assert len(bounded) == 12 and len(set(bounded)) == 12
    assert not any("[" in ln for ln in lines)
    # long rows wrap
    card = [i for i, ln in enumerate(lines) if ln.startswith(" card:")][0]
    assert lines[card + 1].startswith("   +") and lines[card + 1].endswith("<= 4")


def test_stats_are_reported():
    out = solve(knapsack())
    assert out.stats.nodes >= 1 and out.stats.seconds >= 0
    assert knapsack().stats() == {"vars": 3, "integer": 3, "constraints": 1}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_adding_a_constraint_never_restores_feasibility(seed):
    rng = random.Random(seed)
    m = random_model(rng, with_objective=False)
    before = solve(m)
    n = len(m.vars)
    m.add_constraint({f"x{j}": rng.randint(-3, 3) or 1 for j in range(n)}, rng.choice(ilp.RELATIONS),
                     rng.randint(-6, 6), "extra")
    after = solve(m)
    if isinstance(before, Infeasible):
        assert isinstance(after, Infeasible)
    if isinstance(after, Feasible):
        assert check_assignment(m, after.assignment)
