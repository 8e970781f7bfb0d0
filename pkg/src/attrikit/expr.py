"""Tiny arithmetic expression language for analytic test functions.

Grammar (version 1)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"

Variables are ``x1`` .. ``xd`` (1-based) unless another mapping is given.
Constants: ``pi``, ``e``.  Functions: ``sin``, ``cos``, ``exp``, ``relu``.
``^`` is right-associative and binds tighter than unary minus, so
``-x1^2 == -(x1^2)``.
"""

from __future__ import annotations

import math
import re
from typing import Callable, Mapping

import numpy as np

from .errors import ValidationError

GRAMMAR_VERSION = 1

FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "relu": lambda v: np.maximum(v, 0.0),
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)

Node = Callable[[np.ndarray], np.ndarray]


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ValidationError(f"unexpected character {text[pos:].lstrip()[:1]!r} at offset {pos}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
    tokens.append(("end", ""))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Mapping[str, int] | None):
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = variables
        self.used: set[int] = set()

    def peek(self) -> tuple[str, str]:
        return self.tokens[self.i]

    def take(self, value: str | None = None) -> tuple[str, str]:
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            raise ValidationError(f"expected {value!r}, got {tok[1] or 'end of input'!r}")
        self.i += 1
        return tok

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            raise ValidationError(f"trailing input at {self.peek()[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = _binary(op, node, rhs)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = _binary(op, node, rhs)
        return node

    def unary(self) -> Node:
        if self.peek()[1] == "-":
            self.take()
            inner = self.unary()
            return lambda Y: -inner(Y)
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            exponent = self.unary()
            return _binary("^", base, exponent)
        return base

    def atom(self) -> Node:
        kind, value = self.take()
        if kind == "num":
            c = float(value)
            return lambda Y: np.full(Y.shape[0], c)
        if kind == "name":
            if self.peek()[1] == "(":
                if value not in FUNCTIONS:
                    raise ValidationError(f"unknown function {value!r}")
                fn = FUNCTIONS[value]
                self.take("(")
                arg = self.expr()
                self.take(")")
                return lambda Y: fn(arg(Y))
            return self._variable(value)
        if value == "(":
            node = self.expr()
            self.take(")")
            return node
        raise ValidationError(f"unexpected token {value or 'end of input'!r}")

    def _variable(self, name: str) -> Node:
        if self.variables is not None and name in self.variables:
            col = self.variables[name]
        elif self.variables is None and re.fullmatch(r"x[1-9]\d*", name):
            col = int(name[1:]) - 1
        elif name in CONSTANTS:
            c = CONSTANTS[name]
            return lambda Y: np.full(Y.shape[0], c)
        else:
            raise ValidationError(f"unknown variable {name!r}")
        self.used.add(col)
        return lambda Y: Y[:, col]


def _binary(op: str, lhs: Node, rhs: Node) -> Node:
    if op == "+":
        return lambda Y: lhs(Y) + rhs(Y)
    if op == "-":
        return lambda Y: lhs(Y) - rhs(Y)
    if op == "*":
        return lambda Y: lhs(Y) * rhs(Y)
    if op == "/":
        return lambda Y: lhs(Y) / rhs(Y)
    return lambda Y: np.power(lhs(Y), rhs(Y))


def compile_expression(text: str, variables: Mapping[str, int] | None = None) -> tuple[Node, set[int]]:
    """Parse ``text`` into a vectorized evaluator ``(n, d) -> (n,)``.

    Returns the evaluator and the set of column indices it reads.
    """
    parser = _Parser(text, variables)
    return parser.parse(), parser.used
