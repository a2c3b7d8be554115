"""Tiny arithmetic grammar for data expressions in run configs.

Grammar: numeric literals, the variables t (retarded time) and z,
binary + - * / ^ (caret is right-associative power), unary minus,
parentheses, and the functions sin, cos, exp. Parsed once into a
closure evaluating with numpy semantics, so expressions broadcast over
grid arrays. Syntax errors carry the offending position.
"""

import math
import re

import numpy as np

from .errors import ExpressionError

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?|([A-Za-z_]\w*)|(\*\*|[()+\-*/^]))")
_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_VARIABLES = {"t": 0, "tau": 0, "z": 1}


class Expression:
    """Compiled expression; call with (tau, z) arrays or scalars."""

    def __init__(self, source, fn):
        self.source = source
        self._fn = fn

    def __call__(self, tau, z):
        out = self._fn(np.asarray(tau, float), np.asarray(z, float))
        out = np.asarray(out, float)
        return out if out.shape else float(out)

    def __repr__(self):
        return f"Expression({self.source!r})"


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise ExpressionError(f"unexpected character {text[pos]!r}", pos)
        number, name, op = m.groups()
        start = m.start(1) if number else (m.start(2) if name else m.start(3))
        if number:
            tokens.append(("num", float(m.group(0)), start))
        elif name:
            tokens.append(("name", name, start))
        else:
            tokens.append(("op", "^" if op == "**" else op, start))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


def parse_expression(text):
    """Parse `text` into an Expression of (t, z); raise on syntax errors."""
    tokens = _tokenize(text)
    idx = [0]

    def peek():
        return tokens[idx[0]]

    def advance():
        tok = tokens[idx[0]]
        idx[0] += 1
        return tok

    def expect_op(op):
        kind, val, pos = peek()
        if kind != "op" or val != op:
            raise ExpressionError(f"expected {op!r}", pos)
        advance()

    def parse_sum():
        node = parse_product()
        while True:
            kind, val, _ = peek()
            if kind == "op" and val in "+-":
                advance()
                rhs = parse_product()
                node = (lambda a, b: (lambda t, z: a(t, z) + b(t, z)))(node, rhs) if val == "+" \
                    else (lambda a, b: (lambda t, z: a(t, z) - b(t, z)))(node, rhs)
            else:
                return node

    def parse_product():
        node = parse_unary()
        while True:
            kind, val, _ = peek()
            if kind == "op" and val in "*/":
                advance()
                rhs = parse_unary()
                node = (lambda a, b: (lambda t, z: a(t, z) * b(t, z)))(node, rhs) if val == "*" \
                    else (lambda a, b: (lambda t, z: a(t, z) / b(t, z)))(node, rhs)
            else:
                return node

    def parse_unary():
        kind, val, _ = peek()
        if kind == "op" and val == "-":
            advance()
            inner = parse_unary()
            return lambda t, z: -inner(t, z)
        if kind == "op" and val == "+":
            advance()
            return parse_unary()
        return parse_power()

    def parse_power():
        base = parse_atom()
        kind, val, _ = peek()
        if kind == "op" and val == "^":
            advance()
            expo = parse_unary()  # right-associative, allows -n exponents
            return lambda t, z: base(t, z) ** expo(t, z)
        return base

    def parse_atom():
        kind, val, pos = advance()
        if kind == "num":
            return lambda t, z, _v=val: _v
        if kind == "name":
            if val in _FUNCTIONS:
                fn = _FUNCTIONS[val]
                expect_op("(")
                arg = parse_sum()
                expect_op(")")
                return lambda t, z, _f=fn, _a=arg: _f(_a(t, z))
            if val in _VARIABLES:
                return (lambda t, z: t) if _VARIABLES[val] == 0 else (lambda t, z: z)
            raise ExpressionError(f"unknown name {val!r}", pos)
        if kind == "op" and val == "(":
            node = parse_sum()
            expect_op(")")
            return node
        raise ExpressionError("expected a value", pos)

    root = parse_sum()
    kind, _, pos = peek()
    if kind != "end":
        raise ExpressionError("trailing input", pos)

    # evaluate eagerly once to surface domain errors early
    try:
        root(0.0, 0.0)
    except ZeroDivisionError:
        pass
    return Expression(text, lambda t, z: root(t, z) + np.zeros(np.broadcast(t, z).shape))
