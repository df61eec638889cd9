"""
The counter loop, end to end
============================

Samples, refinement, relevance-aware inference and the final check on the
corpus problem ``counter_sum.inv``. Needs a ``z3`` binary on PATH.
"""

from importlib.resources import files

from invsynth.frontend import parse_problem, render_invariant
from invsynth.ir import Atom, CnfPredicate
from invsynth.oasis import OasisConfig, oasis_solve
from invsynth.relinfer import check_vcs, rel_infer
from invsynth.sampler import bootstrap_samples, find_neg_counterexample, find_pos_counterexample
from invsynth.smt import SmtSession

problem = parse_problem(files("invsynth") / "corpus" / "counter_sum.inv")
print("variables:", problem.vars)

# %% Bootstrap: states from Pre and one step after it, and states near a violation.
session = SmtSession()
pos, neg = bootstrap_samples(problem, session)
print(len(pos), "positive and", len(neg), "negative samples")

# %% Refinement. i <= j keeps every reachable state, but it also keeps bad ones.
i_le_j = CnfPredicate.single(Atom.geq({"j": 1, "i": -1}, 0))
print("reachable state outside i <= j:", find_pos_counterexample(problem, i_le_j, session))
print("bad state inside i <= j       :", find_neg_counterexample(problem, i_le_j, session))

# %% Inference restricted to i, j, k. y never enters a feature.
inv = rel_infer(problem, pos, neg, ["i", "j", "k"], session)
print("invariant over {i, j, k}:", render_invariant(inv, problem.vars, "smtlib-term"))
print("check:", check_vcs(problem, inv, session))
session.close()

# %% The whole loop, the way the CLI runs it.
events = []
report = oasis_solve(problem, OasisConfig(tau=30, timeout=60), trace=events.append)
for r in report.rounds:
    print(f"round: relevant={r.relevant_vars} outcome={r.outcome} classifier={r.classifier}")
print(report.verdict, report.invariant_text)
print(report.smt_queries, "solver queries,", report.ilp_solves, "learner calls,", report.time_ms, "ms")
