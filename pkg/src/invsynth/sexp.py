"""Minimal S-expression reader with source positions."""

from __future__ import annotations

from dataclasses import dataclass


class SexpError(Exception):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{line}:{column}: {message}" if line else message)
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Symbol:
    name: str
    line: int = 0
    column: int = 0

    def __eq__(self, other):
        if isinstance(other, Symbol):
            return self.name == other.name
        if isinstance(other, str):
            return self.name == other
        return NotImplemented

    def __hash__(self):
        return hash(self.name)

    def __str__(self):
        return self.name


class SList(list):
    """A parenthesised list that remembers where it opened."""

    line = 0
    column = 0


def _positions(text: str):
    line, col = 1, 1
    for ch in text:
        yield ch, line, col
        if ch == "\n":
            line, col = line + 1, 1
        else:
            col += 1


def tokenize(text: str):
    """Yield ``(kind, value, line, column)`` with kind in ``( ) atom str``."""
    chars = list(_positions(text))
    i, n = 0, len(chars)
    while i < n:
        ch, line, col = chars[i]
        if ch.isspace():
            i += 1
        elif ch == ";":
            while i < n and chars[i][0] != "\n":
                i += 1
        elif ch in "()":
            yield ch, ch, line, col
            i += 1
        elif ch == "|":
            j = i + 1
            while j < n and chars[j][0] != "|":
                j += 1
            if j >= n:
                raise SexpError("unterminated quoted symbol", line, col)
            yield "atom", "".join(c for c, _, _ in chars[i + 1:j]), line, col
            i = j + 1
        elif ch == '"':
            j = i + 1
            buf = []
            while j < n:
                c = chars[j][0]
                if c == '"':
                    if j + 1 < n and chars[j + 1][0] == '"':
                        buf.append('"')
                        j += 2
                        continue
                    break
                buf.append(c)
                j += 1
            if j >= n:
                raise SexpError("unterminated string", line, col)
            yield "str", "".join(buf), line, col
            i = j + 1
        else:
            j = i
            while j < n and not chars[j][0].isspace() and chars[j][0] not in "();|\"":
                j += 1
            yield "atom", "".join(c for c, _, _ in chars[i:j]), line, col
            i = j


def _atom(value: str, line: int, col: int):
    if value.lstrip("-").isdigit() and value not in ("-",):
        return int(value)
    return Symbol(value, line, col)


def parse_all(text: str) -> list:
    """Parse every top-level expression. Integers become ``int``, strings ``str``."""
    stack: list[SList] = [SList()]
    for kind, value, line, col in tokenize(text):
        if kind == "(":
            lst = SList()
            lst.line, lst.column = line, col
            stack.append(lst)
        elif kind == ")":
            if len(stack) == 1:
                raise SexpError("unbalanced ')'", line, col)
            done = stack.pop()
            stack[-1].append(done)
        elif kind == "str":
            stack[-1].append(value)
        else:
            stack[-1].append(_atom(value, line, col))
    if len(stack) != 1:
        opened = stack[-1]
        raise SexpError("unbalanced '(' (missing ')')", opened.line, opened.column)
    return list(stack[0])


def parse_one(text: str):
    items = parse_all(text)
    if len(items) != 1:
        raise SexpError(f"expected one expression, found {len(items)}")
    return items[0]


def position(expr) -> tuple[int, int]:
    return getattr(expr, "line", 0), getattr(expr, "column", 0)


def dumps(expr) -> str:
    if isinstance(expr, list):
        return "(" + " ".join(dumps(e) for e in expr) + ")"
    if isinstance(expr, str) and not isinstance(expr, Symbol):
        return '"' + expr.replace('"', '""') + '"'
    return str(expr)
