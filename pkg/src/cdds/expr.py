"""Kernel expression language.

Grammar (whitespace is insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('-' | '+') factor | atom ('^' integer)?
    atom   := number | 'tau' | '(' expr ')' | func '(' expr ')'
    func   := 'sin' | 'cos' | 'exp'

Expressions compile to vectorised numpy closures of ``tau``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["ExprError", "Expr", "parse_expr", "KernelMatrix"]


class ExprError(ValueError):
    """Malformed expression; carries a 1-based line and column."""

    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{msg} (line {line}, column {col})")
        self.line = line
        self.col = col


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


@dataclass(frozen=True)
class _Node:
    kind: str  # num, tau, neg, add, sub, mul, div, pow, call
    value: float = 0.0
    name: str = ""
    args: tuple = ()


def _tokenize(text: str, line: int, col0: int):
    pos = 0
    toks = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprError(f"unexpected character {text[bad]!r}", line, col0 + bad)
        start = m.start(m.lastgroup)
        toks.append((m.lastgroup, m.group(m.lastgroup), col0 + start))
        pos = m.end()
    toks.append(("end", "", col0 + len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, line: int, col: int):
        self.toks = _tokenize(text, line, col)
        self.i = 0
        self.line = line

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ExprError(msg, self.line, tok[2])

    def expect(self, op):
        t = self.take()
        if t[0] != "op" or t[1] != op:
            self.fail(f"expected {op!r}", t)

    def parse(self) -> _Node:
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = _Node("add" if op == "+" else "sub", args=(node, self.term()))
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = _Node("mul" if op == "*" else "div", args=(node, self.factor()))
        return node

    def factor(self):
        t = self.peek()
        if t[0] == "op" and t[1] in "+-":
            self.take()
            inner = self.factor()
            return inner if t[1] == "+" else _Node("neg", args=(inner,))
        node = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            e = self.take()
            if e[0] != "num" or not re.fullmatch(r"\d+", e[1]):
                self.fail("exponent must be a nonnegative integer", e)
            node = _Node("pow", value=float(int(e[1])), args=(node,))
        return node

    def atom(self):
        t = self.take()
        kind, text, _ = t
        if kind == "num":
            return _Node("num", value=float(text))
        if kind == "name":
            if text == "tau":
                return _Node("tau")
            if text in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _Node("call", name=text, args=(arg,))
            self.fail(f"unknown name {text!r}", t)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.fail("unexpected end of expression", t)
        self.fail(f"unexpected {text!r}", t)


def _compile(n: _Node) -> Callable:
    k = n.kind
    if k == "num":
        v = n.value
        return lambda t: np.full(np.shape(t), v)
    if k == "tau":
        return lambda t: np.asarray(t, dtype=float)
    if k == "neg":
        a = _compile(n.args[0])
        return lambda t: -a(t)
    if k == "call":
        fn = _FUNCS[n.name]
        a = _compile(n.args[0])
        return lambda t: fn(a(t))
    if k == "pow":
        a = _compile(n.args[0])
        p = int(n.value)
        return lambda t: a(t) ** p
    a = _compile(n.args[0])
    b = _compile(n.args[1])
    if k == "add":
        return lambda t: a(t) + b(t)
    if k == "sub":
        return lambda t: a(t) - b(t)
    if k == "mul":
        return lambda t: a(t) * b(t)
    return lambda t: a(t) / b(t)


def _has_tau(n: _Node) -> bool:
    return n.kind == "tau" or any(_has_tau(a) for a in n.args)


def _const_value(n: _Node) -> float:
    return float(_compile(n)(np.zeros(1))[0])


def _freq(n: _Node) -> float:
    """Crude angular-frequency hint: largest |c| with c*tau inside a trig call."""
    best = 0.0
    if n.kind == "call" and n.name in ("sin", "cos"):
        best = max(best, _linear_rate(n.args[0]))
    for a in n.args:
        best = max(best, _freq(a))
    return best


def _linear_rate(n: _Node) -> float:
    if n.kind == "tau":
        return 1.0
    if n.kind == "neg":
        return _linear_rate(n.args[0])
    if n.kind == "mul":
        a, b = n.args
        if not _has_tau(a):
            return abs(_const_value(a)) * _linear_rate(b)
        if not _has_tau(b):
            return abs(_const_value(b)) * _linear_rate(a)
    if n.kind in ("add", "sub"):
        return max(_linear_rate(a) for a in n.args)
    if n.kind == "div" and not _has_tau(n.args[1]):
        return _linear_rate(n.args[0]) / max(abs(_const_value(n.args[1])), 1e-300)
    return 1.0 if _has_tau(n) else 0.0


class Expr:
    """Compiled scalar expression of ``tau``."""

    def __init__(self, text: str, line: int = 1, col: int = 1):
        self.text = str(text).strip()
        self._node = _Parser(str(text), line, col).parse()
        self._fn = _compile(self._node)
        self.is_constant = not _has_tau(self._node)
        self.omega_hint = _freq(self._node)

    def __call__(self, tau):
        return self._fn(np.asarray(tau, dtype=float))

    @property
    def is_zero(self) -> bool:
        return self.is_constant and _const_value(self._node) == 0.0

    def __repr__(self):
        return f"Expr({self.text!r})"


def parse_expr(text: str, line: int = 1, col: int = 1) -> Expr:
    return Expr(text, line, col)


class KernelMatrix:
    """Matrix of scalar expressions, evaluated as ``(len(tau), rows, cols)``."""

    def __init__(self, entries, cols: int | None = None):
        self.entries = [list(r) for r in entries]
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.rows else int(cols or 0)
        if any(len(r) != self.cols for r in self.entries):
            raise ValueError("ragged kernel matrix")

    @classmethod
    def from_strings(cls, rows) -> "KernelMatrix":
        return cls([[e if isinstance(e, Expr) else Expr(str(e)) for e in r] for r in rows])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "KernelMatrix":
        z = Expr("0")
        return cls([[z] * cols for _ in range(rows)], cols=cols)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def is_zero(self) -> bool:
        return all(e.is_zero for r in self.entries for e in r)

    @property
    def omega_hint(self) -> float:
        return max([e.omega_hint for r in self.entries for e in r] + [0.0])

    def __call__(self, tau) -> np.ndarray:
        t = np.atleast_1d(np.asarray(tau, dtype=float))
        out = np.zeros((t.size, self.rows, self.cols))
        for i, r in enumerate(self.entries):
            for j, e in enumerate(r):
                if not e.is_zero:
                    out[:, i, j] = e(t)
        return out
