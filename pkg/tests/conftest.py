import shutil
from pathlib import Path

import pytest

from invsynth.frontend import parse_problem
from invsynth.ir import PartialState

CORPUS = Path(__file__).resolve().parent.parent / "src" / "invsynth" / "corpus"

requires_z3 = pytest.mark.skipif(shutil.which("z3") is None, reason="z3 binary not on PATH")

WORKING_VARS = ("i", "j", "k", "n", "y")


def corpus_problem(name: str):
    return parse_problem(CORPUS / name)


def state(vars, *values):
    """Positional state; ``None`` entries are don't-care."""
    return PartialState.of({v: x for v, x in zip(vars, values) if x is not None})


@pytest.fixture
def session():
    from invsynth.smt import SmtSession
    if shutil.which("z3") is None:
        pytest.skip("z3 binary not on PATH")
    s = SmtSession()
    yield s
    s.close()


@pytest.fixture
def working_example():
    return corpus_problem("counter_sum.inv")


@pytest.fixture
def accumulator():
    return corpus_problem("stuck_accumulator.inv")


_criteria: dict[int, tuple[str, bool]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    number, title = mark.args
    ok = rep.passed and _criteria.get(number, (title, True))[1]
    _criteria[number] = (title, ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if ok else 'FAIL'} {title}")
