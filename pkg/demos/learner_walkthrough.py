"""
Sparse separators from a handful of states
==========================================

A walk through the ILP learner on the counter loop's first samples.
No SMT solver is needed for this script.
"""

from invsynth.ir import PartialState, relevant_vars
from invsynth.learner import Dataset, LearnerConfig, encode, learn, training_error

VARS = ("i", "j", "k", "n", "y")


def state(*values):
    # None marks a don't-care coordinate
    return PartialState.of({v: x for v, x in zip(VARS, values) if x is not None})


# Two reachable states and two states that lead to a violation.
# y is unknown in the very first state, so it stays unbound.
positives = [state(0, 0, 0, 0, None), state(2, 3, 0, 1, 2)]
negatives = [state(1, -1, 0, 0, -1), state(6, 4, 0, 5, 15)]
data = Dataset.from_lists(positives, negatives, VARS)

# The encoding is a small integer program: weights, indicators, one mu per variable.
model = encode(data, LearnerConfig())
print("ILP size:", model.stats())

# The learner walks its ladder of shapes and keeps the first zero-error answer.
result = learn(data)
print("separator:", result.predicate)
print("relevant :", sorted(result.relevant))
print("errors   :", training_error(result.predicate, data))

# Two states that satisfy the separator but still go bad a step or two later.
# Adding them pushes the learner toward k.
more = Dataset.from_lists(positives, negatives + [state(0, 0, -2, -1, 0), state(2, 3, -3, 1, 0)], VARS)
result = learn(more)
print()
print("with the extra negatives:", result.predicate)
print("uses y?", "y" in relevant_vars(result.predicate))
print("ladder step", result.stats["ladder_step"], result.stats["polarity"])
