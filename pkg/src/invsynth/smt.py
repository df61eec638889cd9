"""SMT-LIB2 gateway to an external solver process.

A :class:`SmtSession` owns one solver process and talks to it over
stdin/stdout. Each query runs inside its own ``push``/``pop`` scope and only
declares the free variables of the query, so variables the query never
mentions come back as don't-care entries of the returned state.

When a log sink is attached, every command is written verbatim and every
response is appended as a ``;; `` comment. Such a transcript is a valid SMT-LIB
script and can be fed to :class:`ReplayBackend` to reproduce a run without a
solver.
"""

from __future__ import annotations

import logging
import os
import select
import shlex
import subprocess
import time
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

from . import ir
from .frontend import quote_symbol, to_smtlib
from .ir import Formula, PartialState
from .sexp import SexpError, Symbol, parse_one

log = logging.getLogger(__name__)

DEFAULT_SOLVER = ("z3", "-in", "-smt2")
DEFAULT_TIMEOUT_MS = 10_000
GRACE_S = 2.0


class SmtSessionError(Exception):
    """The solver conversation is out of sync; the session must be discarded."""


@dataclass(frozen=True)
class Valid:
    pass


@dataclass(frozen=True)
class Counterexample:
    state: PartialState


@dataclass(frozen=True)
class Unknown:
    reason: str


@dataclass(frozen=True)
class Sat:
    state: PartialState


@dataclass(frozen=True)
class Unsat:
    pass


CheckOutcome = Union[Valid, Counterexample, Unknown]
ModelOutcome = Union[Sat, Unsat, Unknown]


class _Timeout(Exception):
    pass


class _Crashed(Exception):
    pass


class ProcessBackend:
    """Line-oriented pipe to a solver subprocess."""

    def __init__(self, command: Sequence[str]):
        self.command = list(command)
        self.proc: subprocess.Popen | None = None
        self._buf = b""

    def start(self) -> None:
        self.proc = subprocess.Popen(
            self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, bufsize=0)
        self._buf = b""

    @property
    def alive(self) -> bool:
        return self.proc is not None and self.proc.poll() is None

    def send(self, text: str) -> None:
        try:
            self.proc.stdin.write(text.encode())
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise _Crashed(f"write failed: {e}") from None

    def read_response(self, timeout: float) -> str:
        deadline = time.monotonic() + timeout
        fd = self.proc.stdout.fileno()
        while True:
            text = _take_sexp(self._buf)
            if text is not None:
                raw, self._buf = text
                return raw
            left = deadline - time.monotonic()
            if left <= 0:
                raise _Timeout()
            ready, _, _ = select.select([fd], [], [], left)
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                raise _Crashed(f"solver exited with code {self.proc.wait()}")
            self._buf += chunk

    def kill(self) -> None:
        if self.proc is not None:
            try:
                self.proc.kill()
                self.proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                pass
            for stream in (self.proc.stdin, self.proc.stdout):
                try:
                    stream.close()
                except OSError:
                    pass
        self.proc = None

    def close(self) -> None:
        if self.alive:
            try:
                self.send("(exit)\n")
                self.proc.wait(timeout=1)
            except (_Crashed, subprocess.TimeoutExpired):
                pass
        self.kill()


def _take_sexp(buf: bytes):
    """Split one complete response off the front of ``buf`` (or return None)."""
    i, n = 0, len(buf)
    while i < n and buf[i:i + 1].isspace():
        i += 1
    if i >= n:
        return None
    if buf[i:i + 1] != b"(":
        j = i
        while j < n and not buf[j:j + 1].isspace():
            j += 1
        if j >= n:
            return None
        return buf[i:j].decode(), buf[j:]
    depth = 0
    j = i
    in_str = in_bar = False
    while j < n:
        c = buf[j:j + 1]
        if in_str:
            if c == b'"':
                in_str = False
        elif in_bar:
            if c == b"|":
                in_bar = False
        elif c == b'"':
            in_str = True
        elif c == b"|":
            in_bar = True
        elif c == b"(":
            depth += 1
        elif c == b")":
            depth -= 1
            if depth == 0:
                return buf[i:j + 1].decode(), buf[j + 1:]
        j += 1
    return None


class ReplayBackend:
    """Serves responses from a transcript written by a logging session.

    Commands sent during replay must match the recorded ones (whitespace
    normalised); any divergence is a protocol error.
    """

    def __init__(self, exchanges: list[tuple[str, str]]):
        self.exchanges = list(exchanges)
        self.pos = 0
        self.pending = ""

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayBackend":
        return cls.from_text(Path(path).read_text())

    @classmethod
    def from_text(cls, text: str) -> "ReplayBackend":
        exchanges = []
        sent: list[str] = []
        resp: list[str] = []
        for line in text.splitlines():
            if line.startswith(";; "):
                resp.append(line[3:])
                continue
            if resp:
                exchanges.append(("\n".join(sent), "\n".join(resp)))
                sent, resp = [], []
            if line.startswith(";") or not line.strip():
                continue
            sent.append(line)
        if resp:
            exchanges.append(("\n".join(sent), "\n".join(resp)))
        return cls(exchanges)

    alive = True

    def start(self) -> None:
        pass

    def send(self, text: str) -> None:
        self.pending += text

    def read_response(self, timeout: float) -> str:
        if self.pos >= len(self.exchanges):
            raise SmtSessionError("replay transcript exhausted")
        expected, response = self.exchanges[self.pos]
        if " ".join(expected.split()) != " ".join(self.pending.split()):
            raise SmtSessionError(f"replay divergence at exchange {self.pos}")
        self.pos += 1
        self.pending = ""
        return response

    def kill(self) -> None:
        pass

    def close(self) -> None:
        pass


class SmtSession:
    """One solver process, used by exactly one task at a time."""

    def __init__(self, command: Sequence[str] | str = DEFAULT_SOLVER, timeout_ms: int = DEFAULT_TIMEOUT_MS,
                 log_sink: IO[str] | None = None, seed: int = 0, backend=None):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = tuple(command)
        self.timeout_ms = timeout_ms
        self.log_sink = log_sink
        self.seed = seed
        self.backend = backend if backend is not None else ProcessBackend(self.command)
        self.queries = 0
        self.closed = False
        self._started = False

    @classmethod
    def replay(cls, transcript: str | Path, timeout_ms: int = DEFAULT_TIMEOUT_MS) -> "SmtSession":
        return cls(timeout_ms=timeout_ms, backend=ReplayBackend.from_file(transcript))

    # -- plumbing ---------------------------------------------------------

    def _is_z3(self) -> bool:
        return bool(self.command) and Path(self.command[0]).name.startswith("z3")

    def _preamble(self) -> str:
        lines = ["(set-option :print-success false)", "(set-option :produce-models true)"]
        if self._is_z3():
            lines.append(f"(set-option :timeout {self.timeout_ms})")
            lines.append(f"(set-option :smt.random_seed {self.seed})")
        lines.append("(set-logic ALL)")
        return "\n".join(lines) + "\n"

    def _ensure(self) -> None:
        if self.closed:
            raise SmtSessionError("session is closed")
        if not self._started or not self.backend.alive:
            self.backend.start()
            self._started = True
            self._send(self._preamble())

    def _send(self, text: str) -> None:
        if self.log_sink is not None:
            self.log_sink.write(text)
            self.log_sink.flush()
        self.backend.send(text)

    def _recv(self) -> str:
        resp = self.backend.read_response(self.timeout_ms / 1000 + GRACE_S)
        if self.log_sink is not None:
            self.log_sink.write("".join(f";; {ln}\n" for ln in resp.splitlines()))
            self.log_sink.flush()
        if resp.startswith("(error"):
            self._poison()
            raise SmtSessionError(f"solver error: {resp}")
        return resp

    def _poison(self) -> None:
        self.closed = True
        self.backend.kill()

    def _restart_after_failure(self, reason: str) -> Unknown:
        log.warning("solver failure (%s); restarting process", reason)
        self.backend.kill()
        self._started = False
        return Unknown(reason)

    def close(self) -> None:
        if not self.closed:
            self.closed = True
            self.backend.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- queries ----------------------------------------------------------

    def _query(self, assertions: list[Formula], names: Iterable[str]) -> ModelOutcome:
        self._ensure()
        names = sorted(set(names))
        parts = ["(push 1)\n"]
        parts += [f"(declare-fun {quote_symbol(v)} () Int)\n" for v in names]
        parts += [f"(assert {to_smtlib(a)})\n" for a in assertions]
        parts.append("(check-sat)\n")
        self.queries += 1
        try:
            self._send("".join(parts))
            verdict = self._recv()
            if verdict == "unsat":
                out: ModelOutcome = Unsat()
            elif verdict == "sat":
                self._send("(get-model)\n")
                out = Sat(parse_model(self._recv(), names))
            elif verdict == "unknown":
                self._send("(get-info :reason-unknown)\n")
                out = Unknown(_reason(self._recv()))
            else:
                self._poison()
                raise SmtSessionError(f"unexpected solver response {verdict!r}")
            self._send("(pop 1)\n")
            return out
        except _Timeout:
            return self._restart_after_failure("timeout")
        except _Crashed as e:
            return self._restart_after_failure(f"crash: {e}")

    def check_valid(self, formula: Formula) -> CheckOutcome:
        res = self._query([ir.neg(formula)], ir.free_vars(formula))
        if isinstance(res, Unsat):
            return Valid()
        if isinstance(res, Sat):
            return Counterexample(res.state)
        return res

    def get_model(self, formula: Formula, block: Sequence[PartialState] = ()) -> ModelOutcome:
        names = ir.free_vars(formula)
        assertions = [formula]
        for b in block:
            coords = [(k, v) for k, v in b.items if k in names]
            assertions.append(ir.disj(*(ir.Cmp("!=", ir.Var(k), ir.Const(v)) for k, v in coords)))
        return self._query(assertions, names)

    def is_sat(self, formula: Formula) -> bool | None:
        res = self._query([formula], ir.free_vars(formula))
        if isinstance(res, Unknown):
            return None
        return isinstance(res, Sat)


def _reason(resp: str) -> str:
    try:
        expr = parse_one(resp)
        if isinstance(expr, list) and len(expr) >= 2:
            return str(expr[1])
    except SexpError:
        pass
    return resp


def _value(expr) -> int | None:
    if isinstance(expr, int):
        return expr
    if isinstance(expr, list) and len(expr) == 2 and expr[0] == "-" and isinstance(expr[1], int):
        return -expr[1]
    return None


def parse_model(text: str, names: Iterable[str]) -> PartialState:
    """Read a ``(get-model)`` answer; entries that are absent or non-numeric are don't-care."""
    try:
        expr = parse_one(text)
    except SexpError as e:
        raise SmtSessionError(f"unparseable model: {e}") from None
    if not isinstance(expr, list):
        raise SmtSessionError(f"unparseable model: {text!r}")
    if expr and expr[0] == "model":
        expr = expr[1:]
    wanted = set(names)
    out = {}
    for entry in expr:
        if not (isinstance(entry, list) and len(entry) == 5 and entry[0] == "define-fun"):
            continue
        name = entry[1].name if isinstance(entry[1], Symbol) else str(entry[1])
        if name not in wanted or entry[2]:
            continue
        val = _value(entry[4])
        if val is not None:
            out[name] = val
    return PartialState.of(out)


def check_valid(session: SmtSession, formula: Formula) -> CheckOutcome:
    return session.check_valid(formula)


def get_model(session: SmtSession, formula: Formula, block: Sequence[PartialState] = ()) -> ModelOutcome:
    return session.get_model(formula, block)
