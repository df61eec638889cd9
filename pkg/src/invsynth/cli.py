"""Command-line entry point: ``invsynth solve`` and ``invsynth bench``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__, ir
from .bench import run_benchmarks
from .frontend import FORMATS, ParseError, parse_problem, render_invariant
from .oasis import MODES, OASIS, OasisConfig, OasisConfigError, oasis_solve

EXIT_SOLVED = 0
EXIT_UNSOLVED = 1
EXIT_INPUT = 2

DEFAULT_LOG_DIR = "smt-logs"


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=MODES, default=OASIS)
    p.add_argument("--tau", type=float, default=60.0, help="inference timeout per attempt, seconds")
    p.add_argument("--timeout", type=float, default=300.0, help="global timeout per problem, seconds")
    p.add_argument("--kmax", type=int, default=50, help="unrolling depth cap")
    p.add_argument("--lambda", dest="lam", type=_fraction, default=Fraction(100),
                   help="penalty per variable used by a predicate")
    p.add_argument("--coeff-bound", type=int, default=1000)
    p.add_argument("--bigM", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solver-cmd", default="z3 -in -smt2")
    p.add_argument("--smt-timeout-ms", type=int, default=10_000)
    p.add_argument("--log-smt", nargs="?", const=DEFAULT_LOG_DIR, default=None, metavar="DIR",
                   help=f"write one SMT-LIB transcript per solver process (default dir: {DEFAULT_LOG_DIR})")
    p.add_argument("--dump-ilp", metavar="DIR", default=None, help="write each classifier ILP as an LP file")
    p.add_argument("--no-objective", action="store_true", help="drop the sparsity objective (feasibility only)")
    p.add_argument("--complete-maps", action="store_true", help="fill don't-care coordinates with seeded values")
    p.add_argument("--warm-start", action="store_true", help="start each round's ladder where the last one ended")
    p.add_argument("--no-minimize", action="store_true", help="skip dropping redundant conjuncts")
    p.add_argument("--sequential", action="store_true", help="advance tasks one after another")
    p.add_argument("--relinfer-share", type=int, default=8, metavar="N",
                   help="solver/ILP calls inference makes per refiner call")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invsynth", description="Loop invariant synthesis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="synthesize an invariant for one problem")
    solve.add_argument("file")
    _common(solve)
    solve.add_argument("--stats-json", metavar="PATH", default=None)
    solve.add_argument("--trace", metavar="PATH", default=None, help="write progress events as JSON lines")
    solve.add_argument("--format", choices=FORMATS, default="sygus-define-fun")

    bench = sub.add_parser("bench", help="solve every problem in a directory")
    bench.add_argument("directory")
    _common(bench)
    bench.add_argument("--out", metavar="CSV", default="report.csv")
    return parser


def config_from_args(args: argparse.Namespace) -> OasisConfig:
    return OasisConfig(tau=args.tau, k_max=args.kmax, timeout=args.timeout, mode=args.mode, seed=args.seed,
                       solver_cmd=args.solver_cmd, smt_timeout_ms=args.smt_timeout_ms, lam=args.lam,
                       coeff_bound=args.coeff_bound, bigM=args.bigM, objective=not args.no_objective,
                       complete_maps=args.complete_maps, warm_start=args.warm_start,
                       minimize=not args.no_minimize, parallel=not args.sequential,
                       relinfer_share=args.relinfer_share,
                       log_smt=args.log_smt, dump_ilp=args.dump_ilp)


def _solve(args: argparse.Namespace, config: OasisConfig) -> int:
    try:
        problem = parse_problem(args.file)
    except ParseError as e:
        print(f"{args.file}:{e}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, UnicodeDecodeError, ir.IRError) as e:
        print(f"{args.file}: {e}", file=sys.stderr)
        return EXIT_INPUT

    trace_file = open(args.trace, "w") if args.trace else None
    trace = (lambda ev: trace_file.write(json.dumps(ev, sort_keys=True) + "\n")) if trace_file else None
    try:
        report = oasis_solve(problem, config, trace)
    finally:
        if trace_file is not None:
            trace_file.close()

    if args.stats_json:
        Path(args.stats_json).write_text(json.dumps(report.to_json(), indent=2) + "\n")
    if report.solved:
        print(render_invariant(report.invariant, problem.vars, args.format))
        return EXIT_SOLVED
    print(f"unsolved: {report.reason}", file=sys.stderr)
    return EXIT_UNSOLVED


def _bench(args: argparse.Namespace, config: OasisConfig) -> int:
    if not Path(args.directory).is_dir():
        print(f"{args.directory}: not a directory", file=sys.stderr)
        return EXIT_INPUT

    def progress(row):
        print(f"{row.file}: {row.verdict} ({row.time_ms} ms)", file=sys.stderr)

    report = run_benchmarks(args.directory, config, args.out, progress)
    print(report.summary())
    return EXIT_SOLVED


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
    except OasisConfigError as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return EXIT_INPUT
    if args.command == "solve":
        return _solve(args, config)
    return _bench(args, config)


if __name__ == "__main__":
    sys.exit(main())
