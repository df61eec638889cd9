"""
What relevance buys
===================

Runs the desk corpus under three modes and prints solved counts. The
confounded copies carry eight extra counters that play no part in the
property. Takes a few minutes; needs ``z3`` on PATH.
"""

from importlib.resources import files

from invsynth.bench import confound, problem_files
from invsynth.frontend import parse_problem
from invsynth.oasis import NO_RELINFER, NO_VARS_SELECT, OASIS, OasisConfig, oasis_solve

problems = [parse_problem(f) for f in problem_files(files("invsynth") / "corpus")]
confounded = [confound(p, extra=8, seed=0) for p in problems]


def run(mode, items, timeout):
    solved = []
    for p in items:
        rep = oasis_solve(p, OasisConfig(tau=timeout / 2, timeout=timeout, mode=mode))
        print(f"  {p.name:<22} {rep.verdict:<9} {rep.time_ms:>6} ms")
        solved.append(rep.solved)
    return sum(solved)


table = {}
for mode, items, label in [(OASIS, problems, "plain"), (NO_RELINFER, problems, "plain"),
                           (OASIS, confounded, "confounded"), (NO_VARS_SELECT, confounded, "confounded")]:
    print(f"{mode} on {label}:")
    table[mode, label] = run(mode, items, 20 if label == "plain" else 30)

print()
for (mode, label), n in table.items():
    print(f"{mode:<16} {label:<11} {n}/{len(problems)}")
