"""Top-level synthesis loop.

Each round learns a sparse classifier over all samples gathered so far and
reads off the variables it uses. Three tasks then run side by side:

* a search for a reachable state the classifier rejects (a new positive),
* a search for a state the classifier accepts that reaches a violation
  (a new negative),
* invariant inference restricted to the classifier's variables.

The tasks are generators that yield after every solver or ILP call. A
scheduler advances every live task by one step per tick on a thread pool and
then looks at the results in a fixed order, so a run is reproducible and a
task that loses the race stops within one query. When a refiner wins, its
state joins the samples and the next round starts. When inference wins, the
candidate is re-checked on a fresh solver process before it is reported.
"""

from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Generator

from . import ir
from .frontend import render_invariant, to_smtlib
from .ir import CnfPredicate, Formula, PartialState, VcProblem
from .learner import (DEFAULT_LADDER, Dataset, LearnerConfig, LearnResult, LearnTimeout, NoSeparator,
                      filter_variables, learn)
from .relinfer import (FailPost, FailPre, NoSolution, Pass, RelInferConfig, RelInferError, Timeout,
                       check_vcs, rel_infer_steps)
from .sampler import NEG, POS, BootstrapFailed, UnrollCache, bootstrap_samples, find_neg_steps, find_pos_steps
from .smt import DEFAULT_SOLVER, SmtSession, SmtSessionError

log = logging.getLogger(__name__)

OASIS = "oasis"
NO_VARS_SELECT = "no-vars-select"
NAIVE_VARS_SELECT = "naive-vars-select"
LEARN_ONLY = "learn-only"
NO_RELINFER = "no-relinfer"
MODES = (OASIS, NO_VARS_SELECT, NAIVE_VARS_SELECT, LEARN_ONLY, NO_RELINFER)

MAX_PARKED = 8  # suspended inference tasks kept between rounds, one per relevant set

SOLVED = "Solved"
UNSOLVED = "Unsolved"


class OasisConfigError(ValueError):
    pass


class SoundnessError(AssertionError):
    """A candidate reached the exit without passing the independent check."""


@dataclass(frozen=True)
class OasisConfig:
    tau: float = 60.0
    k_max: int = 50
    timeout: float = 300.0
    mode: str = OASIS
    seed: int = 0
    solver_cmd: str = " ".join(DEFAULT_SOLVER)
    smt_timeout_ms: int = 10_000
    lam: Fraction = Fraction(100)
    coeff_bound: int = 1000
    bigM: int | None = None
    objective: bool = True
    complete_maps: bool = False
    warm_start: bool = False
    per_class: int = 8
    max_rounds: int = 200
    learner_time_limit: float = 30.0
    minimize: bool = True
    parallel: bool = True
    relinfer_share: int = 8
    log_smt: str | None = None
    dump_ilp: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise OasisConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if not 0 < self.tau < self.timeout:
            raise OasisConfigError("tau must be positive and below the global timeout")
        if self.relinfer_share < 1:
            raise OasisConfigError("relinfer_share must be at least 1")
        if self.k_max < 0 or self.per_class < 1:
            raise OasisConfigError("k_max must be non-negative and per_class positive")

    def learner(self) -> LearnerConfig:
        return LearnerConfig(coeff_bound=self.coeff_bound, bigM=self.bigM, lam=Fraction(self.lam),
                             objective=self.objective, complete=self.complete_maps, seed=self.seed,
                             time_limit=self.learner_time_limit)


@dataclass
class RoundInfo:
    relevant_vars: list[str]
    classifier: str
    pos_count: int
    neg_count: int
    outcome: str = ""


@dataclass
class RunReport:
    verdict: str
    reason: str = ""
    invariant: Formula | None = None
    invariant_text: str = ""
    time_ms: int = 0
    rounds: list[RoundInfo] = field(default_factory=list)
    smt_queries: int = 0
    ilp_solves: int = 0
    events: list[dict] = field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.verdict == SOLVED

    @property
    def invariant_size(self) -> int:
        return ir.node_count(self.invariant) if self.invariant is not None else 0

    @property
    def relevant_count(self) -> int:
        return len(self.rounds[-1].relevant_vars) if self.rounds else 0

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "time_ms": self.time_ms,
            "rounds": [asdict(r) for r in self.rounds],
            "smt_queries": self.smt_queries,
            "ilp_solves": self.ilp_solves,
            "invariant": self.invariant_text or None,
            "invariant_size": self.invariant_size,
        }


# ---------------------------------------------------------------------------
# sessions


class _Sessions:
    """Creates and tracks every solver process of one run."""

    def __init__(self, config: OasisConfig):
        self.config = config
        self.all: list[SmtSession] = []
        self.sinks = []
        self.counter = itertools.count()

    def open(self, label: str) -> SmtSession:
        sink = None
        if self.config.log_smt is not None:
            path = Path(self.config.log_smt)
            path.mkdir(parents=True, exist_ok=True)
            sink = open(path / f"{next(self.counter):03d}_{label}.smt2", "w")
            self.sinks.append(sink)
        s = SmtSession(self.config.solver_cmd, timeout_ms=self.config.smt_timeout_ms,
                       log_sink=sink, seed=self.config.seed)
        self.all.append(s)
        return s

    def fresh(self, label: str = "check") -> Callable[[], SmtSession]:
        return lambda: self.open(label)

    @property
    def queries(self) -> int:
        return sum(s.queries for s in self.all)

    def close(self) -> None:
        for s in self.all:
            s.close()
        for f in self.sinks:
            f.close()


# ---------------------------------------------------------------------------
# scheduler


@dataclass
class _Task:
    name: str
    gen: Generator
    done: bool = False
    value: object = None
    error: BaseException | None = None


def _advance(task: _Task) -> None:
    try:
        next(task.gen)
    except StopIteration as stop:
        task.done, task.value = True, stop.value
    except Exception as e:  # noqa: BLE001 - reported to the coordinator
        task.done, task.error = True, e


class _Ticker:
    def __init__(self, parallel: bool):
        self.pool = ThreadPoolExecutor(max_workers=3) if parallel else None

    def tick(self, tasks: list[_Task], steps: dict[str, int] | None = None) -> None:
        """Advance every live task by its number of steps (default one)."""
        steps = steps or {}

        def run(t: _Task) -> None:
            for _ in range(steps.get(t.name, 1)):
                if t.done:
                    break
                _advance(t)

        live = [t for t in tasks if not t.done]
        if self.pool is None or len(live) < 2:
            for t in live:
                run(t)
            return
        for f in [self.pool.submit(run, t) for t in live]:
            f.result()

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown(wait=True)


def _cancel(tasks: list[_Task]) -> None:
    for t in tasks:
        if not t.done:
            t.gen.close()
            t.done = True


# ---------------------------------------------------------------------------
# the run


class _Run:
    def __init__(self, problem: VcProblem, config: OasisConfig, trace: Callable[[dict], None] | None):
        self.problem = problem
        self.config = config
        self.t0 = time.monotonic()
        self.deadline = self.t0 + config.timeout
        self.sessions = _Sessions(config)
        self.report = RunReport(UNSOLVED)
        self.counters = {"ilp_solves": 0}
        self.positives: list[PartialState] = []
        self.negatives: list[PartialState] = []
        self.user_trace = trace
        self.caches = {POS: UnrollCache(POS), NEG: UnrollCache(NEG)}
        self.ladder_start = 0
        self.parked: dict[tuple[str, ...], _Task] = {}

    # -- helpers ------------------------------------------------------------

    def emit(self, event: dict) -> None:
        self.report.events.append(event)
        if self.user_trace is not None:
            self.user_trace(event)

    def remaining(self) -> float:
        return self.deadline - time.monotonic()

    def add(self, states: list[PartialState], label: str) -> None:
        dest = self.positives if label == POS else self.negatives
        for s in states:
            if s not in dest:
                dest.append(s)

    def relinfer_config(self, tau: float) -> RelInferConfig:
        tau = max(min(tau, self.remaining()), 0.001)
        return RelInferConfig(tau=tau, max_rounds=self.config.max_rounds, learner=self.config.learner())

    def classify(self, round_no: int) -> LearnResult:
        cfg = self.config.learner()
        cfg = replace(cfg, time_limit=max(min(cfg.time_limit or self.remaining(), self.remaining()), 0.001))
        data = Dataset.from_lists(self.positives, self.negatives, self.problem.vars)
        self.counters["ilp_solves"] += 1
        start = self.ladder_start if self.config.warm_start else 0
        try:
            res = learn(data, None, cfg, DEFAULT_LADDER, start, self.config.dump_ilp, f"round{round_no}")
        except LearnTimeout as e:
            if e.incumbent is None:
                raise
            res = e.incumbent
        self.ladder_start = res.stats.get("ladder_step", 0)
        return res

    def relinfer(self, session: SmtSession, relevant, tau: float) -> Generator:
        return rel_infer_steps(self.problem, self.positives, self.negatives, relevant, session,
                               self.relinfer_config(tau), self.sessions.fresh("relinfer-check"),
                               self.emit, self.counters)

    def finish(self, verdict: str, reason: str = "", invariant: Formula | None = None) -> RunReport:
        rep = self.report
        rep.verdict, rep.reason = verdict, reason
        if invariant is not None:
            rep.invariant = invariant
            rep.invariant_text = render_invariant(invariant, self.problem.vars)
        return rep

    def solved(self, candidate: Formula) -> RunReport:
        """The soundness gate: nothing leaves as Solved without a fresh Pass."""
        if self.config.minimize:
            candidate = self.minimize(candidate)
        checker = self.sessions.open("final-check")
        try:
            verdict = check_vcs(self.problem, candidate, checker)
        finally:
            checker.close()
        if not isinstance(verdict, Pass):
            return self.finish(UNSOLVED, f"candidate rejected by the final check: {verdict}")
        return self.finish(SOLVED, invariant=candidate)

    def minimize(self, candidate: Formula) -> Formula:
        parts = list(candidate.args) if isinstance(candidate, ir.And) else [candidate]
        if len(parts) < 2:
            return candidate
        session = self.sessions.open("minimize")
        try:
            i = 0
            while i < len(parts) and len(parts) > 1 and self.remaining() > 0:
                trial = parts[:i] + parts[i + 1:]
                if isinstance(check_vcs(self.problem, ir.conj(*trial), session), Pass):
                    parts = trial
                else:
                    i += 1
        finally:
            session.close()
        return ir.conj(*parts)

    def bootstrap(self) -> None:
        session = self.sessions.open("bootstrap")
        try:
            pos, neg = bootstrap_samples(self.problem, session, self.config.per_class)
        finally:
            session.close()
        self.add(pos, POS)
        self.add(neg, NEG)
        self.emit({"event": "bootstrap", "pos": len(pos), "neg": len(neg)})

    # -- modes --------------------------------------------------------------

    def run(self) -> RunReport:
        mode = self.config.mode
        try:
            self.bootstrap()
            if mode == OASIS:
                return self.run_oasis()
            if mode == NO_VARS_SELECT:
                return self.run_fixed_vars()
            if mode == NAIVE_VARS_SELECT:
                return self.run_naive()
            if mode == LEARN_ONLY:
                return self.run_classifier_only(refine=False)
            return self.run_classifier_only(refine=True)
        except BootstrapFailed as e:
            return self.finish(UNSOLVED, f"bootstrap failed: {e}")
        except NoSeparator as e:
            return self.finish(UNSOLVED, f"samples cannot be separated: {e}")
        except LearnTimeout as e:
            return self.finish(UNSOLVED, f"classifier learning ran out of budget: {e}")
        except SmtSessionError as e:
            return self.finish(UNSOLVED, f"solver protocol error: {e}")
        except OSError as e:
            return self.finish(UNSOLVED, f"solver unavailable: {e}")

    def run_oasis(self) -> RunReport:
        ticker = _Ticker(self.config.parallel)
        sess = {name: self.sessions.open(name) for name in ("pos", "neg", "relinfer")}
        try:
            for round_no in itertools.count():
                if self.remaining() <= 0:
                    return self.finish(UNSOLVED, "global timeout")
                res = self.classify(round_no)
                relevant = [v for v in self.problem.vars if v in filter_variables(res)] or list(self.problem.vars)
                info = RoundInfo(relevant, str(res.predicate), len(self.positives), len(self.negatives))
                self.report.rounds.append(info)
                self.emit({"event": "round", "round": round_no, "relevant": relevant,
                           "classifier": info.classifier})
                out = self.oasis_round(ticker, sess, res.predicate, relevant, info)
                if out is not None:
                    return out
        finally:
            _cancel(list(self.parked.values()))
            self.parked.clear()
            ticker.close()

    def oasis_round(self, ticker: _Ticker, sess: dict, classifier: CnfPredicate,
                    relevant: list[str], info: RoundInfo) -> RunReport | None:
        p, cfg = self.problem, self.config
        t1 = _Task("pos", find_pos_steps(p, classifier, sess["pos"], cfg.k_max, self.caches[POS]))
        t2 = _Task("neg", find_neg_steps(p, classifier, sess["neg"], cfg.k_max, self.caches[NEG]))
        t3 = self.resume(relevant)
        if t3 is None:
            t3 = _Task("relinfer", self.relinfer(sess["relinfer"], relevant, cfg.tau))
        tasks = [t3, t1, t2]
        # escalation ladder once both refiners are exhausted: longer tau, then every variable
        escalations = [(relevant, 2 * cfg.tau)]
        if len(relevant) < len(p.vars):
            escalations.append((list(p.vars), 2 * cfg.tau))
        while True:
            if self.remaining() <= 0:
                _cancel(tasks)
                info.outcome = "timeout"
                return self.finish(UNSOLVED, "global timeout")
            ticker.tick(tasks, {"relinfer": cfg.relinfer_share})
            for t in (t1, t2):
                if t.error is not None:
                    _cancel(tasks)
                    raise t.error
            if t3.done and t3.error is None:
                _cancel(tasks)
                info.outcome = "relinfer"
                return self.solved(t3.value)
            found = [(t, t.value) for t in (t1, t2) if t.done and t.value is not None]
            if found:
                _cancel([t1, t2])
                self.park(relevant, t3)
                for t, state in found:
                    self.add([state], POS if t is t1 else NEG)
                    self.emit({"event": "sample", "label": t.name, "state": str(state)})
                info.outcome = "+".join(t.name for t, _ in found)
                return None
            if t3.done and t1.done and t2.done:
                if isinstance(t3.error, SmtSessionError):
                    raise t3.error
                if not isinstance(t3.error, RelInferError):
                    raise t3.error
                self.emit({"event": "relinfer-failed", "reason": str(t3.error), "relevant": relevant})
                if not escalations:
                    info.outcome = "exhausted"
                    return self.finish(UNSOLVED, f"inference failed: {t3.error}")
                relevant, tau = escalations.pop(0)
                self.emit({"event": "escalate", "relevant": relevant, "tau": tau})
                info.relevant_vars = relevant
                t3 = _Task("relinfer", self.relinfer(sess["relinfer"], relevant, tau))
                tasks = [t3, t1, t2]

    def park(self, relevant: list[str], task: _Task) -> None:
        """Suspend inference between rounds; it resumes in a later round with the same variables."""
        if task.done:
            return
        self.parked[tuple(relevant)] = task
        while len(self.parked) > MAX_PARKED:
            oldest = next(iter(self.parked))
            _cancel([self.parked.pop(oldest)])

    def resume(self, relevant: list[str]) -> _Task | None:
        task = self.parked.pop(tuple(relevant), None)
        if task is not None:
            self.emit({"event": "resume", "relevant": relevant})
        return task

    def run_fixed_vars(self) -> RunReport:
        session = self.sessions.open("relinfer")
        relevant = list(self.problem.vars)
        self.report.rounds.append(RoundInfo(relevant, "", len(self.positives), len(self.negatives)))
        try:
            gen = self.relinfer(session, relevant, self.remaining())
            task = _Task("relinfer", gen)
            while not task.done:
                _advance(task)
        finally:
            session.close()
        if task.error is not None:
            if not isinstance(task.error, RelInferError):
                raise task.error
            return self.finish(UNSOLVED, f"inference failed: {task.error}")
        return self.solved(task.value)

    def run_naive(self) -> RunReport:
        session = self.sessions.open("relinfer")
        try:
            vars = list(self.problem.vars)
            for size in range(1, len(vars) + 1):
                for subset in itertools.combinations(vars, size):
                    if self.remaining() <= 0:
                        return self.finish(UNSOLVED, "global timeout")
                    info = RoundInfo(list(subset), "", len(self.positives), len(self.negatives))
                    self.report.rounds.append(info)
                    task = _Task("relinfer", self.relinfer(session, subset, self.config.tau))
                    while not task.done:
                        _advance(task)
                    if task.error is None:
                        info.outcome = "relinfer"
                        return self.solved(task.value)
                    if not isinstance(task.error, RelInferError):
                        raise task.error
                    info.outcome = type(task.error).__name__
        finally:
            session.close()
        return self.finish(UNSOLVED, "no variable subset yielded an invariant")

    def run_classifier_only(self, refine: bool) -> RunReport:
        """Check the classifier itself as the invariant, refining it from counterexamples."""
        check = self.sessions.open("check")
        sess = {name: self.sessions.open(name) for name in ("pos", "neg")}
        p = self.problem
        for round_no in itertools.count():
            if self.remaining() <= 0:
                return self.finish(UNSOLVED, "global timeout")
            res = self.classify(round_no)
            relevant = [v for v in p.vars if v in filter_variables(res)]
            info = RoundInfo(relevant, str(res.predicate), len(self.positives), len(self.negatives))
            self.report.rounds.append(info)
            candidate = res.predicate.to_formula()
            verdict = check_vcs(p, candidate, check)
            if isinstance(verdict, Pass):
                info.outcome = "classifier"
                return self.solved(candidate)
            if not refine:
                info.outcome = "rejected"
                return self.finish(UNSOLVED, f"classifier is not an invariant: {verdict}")
            new_pos, new_neg = [], []
            if isinstance(verdict, FailPre):
                new_pos.append(ir.project(verdict.state, p.vars))
            elif isinstance(verdict, FailPost):
                new_neg.append(ir.project(verdict.state, p.vars))
            else:
                state = _run(find_pos_steps(p, res.predicate, sess["pos"], self.config.k_max, self.caches[POS]))
                if state is not None:
                    new_pos.append(state)
                else:
                    state = _run(find_neg_steps(p, res.predicate, sess["neg"], self.config.k_max,
                                                self.caches[NEG]))
                    if state is not None:
                        new_neg.append(state)
            new_pos = [s for s in new_pos if s not in self.positives]
            new_neg = [s for s in new_neg if s not in self.negatives]
            if not new_pos and not new_neg:
                info.outcome = "stuck"
                return self.finish(UNSOLVED, f"classifier is not an invariant and no refinement exists: {verdict}")
            self.add(new_pos, POS)
            self.add(new_neg, NEG)
            info.outcome = "refined"
        raise AssertionError("unreachable")


def _run(gen: Generator):
    while True:
        try:
            next(gen)
        except StopIteration as stop:
            return stop.value


def oasis_solve(problem: VcProblem, config: OasisConfig | None = None,
                trace: Callable[[dict], None] | None = None) -> RunReport:
    """Search for an inductive invariant of ``problem`` that implies its postcondition."""
    config = config or OasisConfig()
    run = _Run(problem, config, trace)
    try:
        report = run.run()
    finally:
        run.sessions.close()
    report.smt_queries = run.sessions.queries
    report.ilp_solves = run.counters["ilp_solves"]
    report.time_ms = int((time.monotonic() - run.t0) * 1000)
    if report.solved and report.invariant is None:
        raise SoundnessError("Solved verdict without an invariant")
    log.info("%s: %s in %d ms", problem.name or "problem", report.verdict, report.time_ms)
    return report


def describe(report: RunReport) -> str:
    if report.solved:
        return f"{SOLVED}: {to_smtlib(report.invariant)}"
    return f"{UNSOLVED}: {report.reason}"
