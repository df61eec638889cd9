import json
import shutil
import subprocess
import sys

import pytest

from invsynth import ir
from invsynth.bench import (CSV_COLUMNS, ERROR, confound, mask_timing, mutate, problem_files, run_benchmarks)
from invsynth.cli import EXIT_INPUT, EXIT_SOLVED, EXIT_UNSOLVED, main
from invsynth.frontend import ProblemSource, parse_problem
from invsynth.oasis import OasisConfig

from .conftest import CORPUS, corpus_problem, requires_z3

FAST = ["--tau", "20", "--timeout", "60"]


def test_empty_directory(tmp_path):
    rep = run_benchmarks(tmp_path, OasisConfig(tau=5, timeout=10), tmp_path / "r.csv")
    assert rep.total == 0
    assert (tmp_path / "r.csv").read_text() == ",".join(CSV_COLUMNS) + "\n# solved: 0/0\n"


def test_problem_files_are_sorted_and_filtered(tmp_path):
    for name in ("b.inv", "a.sl", "notes.txt", "c.vc"):
        (tmp_path / name).write_text("")
    assert [p.name for p in problem_files(tmp_path)] == ["a.sl", "b.inv", "c.vc"]


@requires_z3
def test_bench_rows_and_determinism(tmp_path):
    for name in ("stuck_accumulator.inv", "bounded_increment.inv"):
        shutil.copy(CORPUS / name, tmp_path / name)
    (tmp_path / "broken.inv").write_text("(vars x) (pre (= x 0)")
    cfg = OasisConfig(tau=20, timeout=60)
    first = run_benchmarks(tmp_path, cfg, tmp_path / "one.csv")
    second = run_benchmarks(tmp_path, cfg, tmp_path / "two.csv")
    assert [r.file for r in first.rows] == ["bounded_increment.inv", "broken.inv", "stuck_accumulator.inv"]
    assert first.rows[1].verdict == ERROR
    assert first.solved == 2 and first.summary() == "# solved: 2/3"
    assert mask_timing((tmp_path / "one.csv").read_text()) == mask_timing((tmp_path / "two.csv").read_text())


def test_mask_timing_blanks_only_time():
    text = "file,verdict,time_ms,vars,relevant,invariant_size\na.inv,Solved,12,2,1,5\n# solved: 1/1\n"
    assert mask_timing(text) == "file,verdict,time_ms,vars,relevant,invariant_size\na.inv,Solved,,2,1,5\n" \
                                "# solved: 1/1\n"


def test_confound_adds_irrelevant_counters():
    p = corpus_problem("counter_sum.inv")
    c = confound(p, extra=8, seed=1)
    assert len(c.vars) == len(p.vars) + 8
    new = [v for v in c.vars if v not in p.vars]
    assert all(v.startswith("z") for v in new)
    assert c.post == p.post
    assert all(ir.primed(v) in ir.free_vars(c.trans) for v in new)
    assert confound(p, 8, 1) == c


def test_mutate_is_seeded_and_changes_something():
    p = corpus_problem("counter_sum.inv")
    assert mutate(p, 3) == mutate(p, 3)
    assert any(mutate(p, s) != p for s in range(5))
    assert mutate(p, 3).vars == p.vars


# ---------------------------------------------------------------------------
# CLI


def test_cli_missing_file(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "none.inv")]) == EXIT_INPUT


def test_cli_parse_error(tmp_path, capsys):
    f = tmp_path / "bad.inv"
    f.write_text("(vars x)\n(pre (= x 0)\n")
    assert main(["solve", str(f)]) == EXIT_INPUT
    assert "bad.inv:" in capsys.readouterr().err


def test_cli_bad_config(capsys):
    assert main(["solve", str(CORPUS / "counter_sum.inv"), "--tau", "500", "--timeout", "10"]) == EXIT_INPUT


def test_cli_bench_not_a_directory(tmp_path):
    assert main(["bench", str(tmp_path / "nope")]) == EXIT_INPUT


def test_cli_rejects_bad_lambda():
    with pytest.raises(SystemExit):
        main(["solve", "x.inv", "--lambda", "abc"])


@requires_z3
def test_cli_solve_prints_define_fun(tmp_path, capsys):
    stats = tmp_path / "stats.json"
    trace = tmp_path / "trace.jsonl"
    code = main(["solve", str(CORPUS / "counter_sum.inv"), *FAST, "--stats-json", str(stats),
                 "--trace", str(trace)])
    assert code == EXIT_SOLVED
    out = capsys.readouterr().out.strip()
    assert out.startswith("(define-fun inv-f ((i Int) (j Int) (k Int) (n Int) (y Int)) Bool")
    data = json.loads(stats.read_text())
    assert data["verdict"] == "Solved" and data["invariant"] == out
    events = [json.loads(line) for line in trace.read_text().splitlines()]
    assert events[0]["event"] == "bootstrap"


@requires_z3
def test_cli_unsolved_exit_code(tmp_path, capsys):
    f = tmp_path / "unsafe.inv"
    f.write_text("(vars x) (pre (= x 0)) (trans (= x! (+ x 1))) (post (<= x 3))")
    assert main(["solve", str(f), "--tau", "5", "--timeout", "20"]) == EXIT_UNSOLVED
    assert "unsolved:" in capsys.readouterr().err


@requires_z3
def test_cli_smtlib_term_format(capsys):
    assert main(["solve", str(CORPUS / "stuck_accumulator.inv"), *FAST, "--format", "smtlib-term"]) == 0
    assert not capsys.readouterr().out.startswith("(define-fun")


@requires_z3
def test_cli_log_smt_directory(tmp_path):
    logs = tmp_path / "logs"
    assert main(["solve", str(CORPUS / "stuck_accumulator.inv"), *FAST, "--log-smt", str(logs)]) == 0
    assert list(logs.glob("*.smt2"))


@requires_z3
def test_console_script_bench(tmp_path):
    shutil.copy(CORPUS / "stuck_accumulator.inv", tmp_path)
    out = tmp_path / "report.csv"
    res = subprocess.run([sys.executable, "-m", "invsynth.cli", "bench", str(tmp_path), *FAST, "--out", str(out)],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0
    assert res.stdout.strip() == "# solved: 1/1"
    assert out.read_text().splitlines()[1].startswith("stuck_accumulator.inv,Solved,")
