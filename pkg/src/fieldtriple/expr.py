"""Boundary-condition expressions in the variables x and y.

A tiny language for entering Dirichlet data on the command line:

    numbers     decimal literals, optionally with a fraction and exponent
    variables   x, y
    operators   + - * / ^   (with unary minus)
    functions   sin, cos, exp, sinh, cosh, sqrt
    grouping    parentheses

Precedence, loosest to tightest: ``+ -`` then ``* /`` then unary minus then
``^``; ``^`` associates to the right, everything else to the left.  So
``-x^2`` means ``-(x^2)`` and ``a^b^c`` means ``a^(b^c)``.

The parser is a hand-rolled precedence climber over a scanner that tracks
byte offsets; syntax problems raise :class:`ExprSyntaxError` carrying the
offset of the offending token (the length of the source for an unexpected
end of input).  Printing with :func:`expr_to_text` inserts only the
parentheses needed to preserve the tree, and reparsing the printed form
reproduces the original tree exactly.

Evaluation is plain float arithmetic through the ``math`` module; leaving a
function's domain (square root of a negative value, division by zero, pow
domain violations, overflow) raises :class:`DomainError` rather than
returning a complex or infinite result.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from .errors import DomainError, ExprSyntaxError, InvalidInputError

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Neg",
    "Binary",
    "Call",
    "FUNCTION_NAMES",
    "parse_expr",
    "expr_to_text",
    "evaluate",
]


# ---------------------------------------------------------------------------
# Syntax tree


@dataclass(frozen=True)
class Num:
    """A numeric literal (literals are non-negative; signs are Neg nodes)."""

    value: float


@dataclass(frozen=True)
class Var:
    """One of the two coordinates, "x" or "y"."""

    name: str


@dataclass(frozen=True)
class Neg:
    """Unary minus."""

    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    """A binary operation; op is one of "+", "-", "*", "/", "^"."""

    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Call:
    """A one-argument function application."""

    fn: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, Binary, Call]

_VARIABLES = ("x", "y")

_FUNCTIONS = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "sinh": math.sinh,
    "cosh": math.cosh,
}

FUNCTION_NAMES = tuple(sorted(_FUNCTIONS)) + ("sqrt",)

# Binary precedence; unary minus sits between "* /" and "^" at level 3.
_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_UNARY_PRECEDENCE = 3
_RIGHT_ASSOCIATIVE = frozenset("^")


# ---------------------------------------------------------------------------
# Scanner

_NUMBER = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "name", "op", "(", ")", "end"
    text: str
    pos: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or c == ".":
            match = _NUMBER.match(src, i)
            if match is None:
                raise ExprSyntaxError("malformed number", i)
            tokens.append(_Token("num", match.group(), i))
            i = match.end()
            continue
        if c.isalpha() or c == "_":
            match = _NAME.match(src, i)
            tokens.append(_Token("name", match.group(), i))
            i = match.end()
            continue
        if c in "+-*/^":
            tokens.append(_Token("op", c, i))
            i += 1
            continue
        if c in "()":
            tokens.append(_Token(c, c, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


# ---------------------------------------------------------------------------
# Parser (precedence climbing)


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.index = 0

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def parse(self) -> Expr:
        tree = self.parse_at(0)
        tail = self.peek()
        if tail.kind != "end":
            raise ExprSyntaxError(f"unexpected {tail.text!r}", tail.pos)
        return tree

    def parse_at(self, min_prec: int) -> Expr:
        lhs = self.parse_prefix()
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _PRECEDENCE:
                break
            prec = _PRECEDENCE[tok.text]
            if prec < min_prec:
                break
            self.advance()
            next_min = prec if tok.text in _RIGHT_ASSOCIATIVE else prec + 1
            rhs = self.parse_at(next_min)
            lhs = Binary(tok.text, lhs, rhs)
        return lhs

    def parse_prefix(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.parse_at(_UNARY_PRECEDENCE))
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "name":
            if tok.text in _VARIABLES:
                return Var(tok.text)
            if tok.text in _FUNCTIONS or tok.text == "sqrt":
                opener = self.advance()
                if opener.kind != "(":
                    raise ExprSyntaxError(
                        f"function {tok.text!r} needs parentheses", opener.pos)
                arg = self.parse_at(0)
                closer = self.advance()
                if closer.kind != ")":
                    raise ExprSyntaxError("expected ')'", closer.pos)
                return Call(tok.text, arg)
            raise ExprSyntaxError(f"unknown name {tok.text!r}", tok.pos)
        if tok.kind == "(":
            inner = self.parse_at(0)
            closer = self.advance()
            if closer.kind != ")":
                raise ExprSyntaxError("expected ')'", closer.pos)
            return inner
        if tok.kind == "end":
            raise ExprSyntaxError("unexpected end of input", tok.pos)
        raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.pos)


def parse_expr(src: str) -> Expr:
    """Parse source text into an expression tree.

    Raises ExprSyntaxError (with the byte offset of the problem) on any
    malformed input, including trailing junk after a complete expression.
    """
    if not isinstance(src, str):
        raise InvalidInputError(f"expression source must be str, got {type(src).__name__}")
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# Printer


def _print_at(e: Expr, parent_prec: int) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        body = "-" + _print_at(e.arg, _UNARY_PRECEDENCE)
        return f"({body})" if parent_prec > _UNARY_PRECEDENCE else body
    if isinstance(e, Call):
        return f"{e.fn}({_print_at(e.arg, 0)})"
    if isinstance(e, Binary):
        prec = _PRECEDENCE[e.op]
        if e.op in _RIGHT_ASSOCIATIVE:
            lhs, rhs = _print_at(e.lhs, prec + 1), _print_at(e.rhs, prec)
        else:
            lhs, rhs = _print_at(e.lhs, prec), _print_at(e.rhs, prec + 1)
        body = f"{lhs}{e.op}{rhs}"
        return f"({body})" if prec < parent_prec else body
    raise InvalidInputError(f"not an expression node: {type(e).__name__}")


def expr_to_text(e: Expr) -> str:
    """Print a tree compactly; parse(expr_to_text(t)) reproduces t exactly."""
    return _print_at(e, 0)


# ---------------------------------------------------------------------------
# Evaluation


def evaluate(e: Expr, x: float, y: float) -> float:
    """Evaluate at a point, as plain float arithmetic.

    Domain violations (sqrt of a negative value, division by zero, pow
    outside its real domain, overflow) raise DomainError.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return x if e.name == "x" else y
    if isinstance(e, Neg):
        return -evaluate(e.arg, x, y)
    if isinstance(e, Call):
        v = evaluate(e.arg, x, y)
        if e.fn == "sqrt":
            if v < 0.0:
                raise DomainError(f"sqrt of negative value {v!r}")
            return math.sqrt(v)
        try:
            return _FUNCTIONS[e.fn](v)
        except OverflowError:
            raise DomainError(f"{e.fn} overflow at argument {v!r}") from None
    if isinstance(e, Binary):
        a = evaluate(e.lhs, x, y)
        b = evaluate(e.rhs, x, y)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0.0:
                raise DomainError("division by zero")
            return a / b
        try:
            return math.pow(a, b)
        except ValueError:
            raise DomainError(f"pow domain violation: {a!r} ^ {b!r}") from None
        except OverflowError:
            raise DomainError(f"pow overflow: {a!r} ^ {b!r}") from None
    raise InvalidInputError(f"not an expression node: {type(e).__name__}")
