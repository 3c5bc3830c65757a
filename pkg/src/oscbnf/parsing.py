"""Plain-text polynomial literals.

Grammar (whitespace ignored)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') integer)?
    atom   := number | name | '(' expr ')'

Names are ``x1 xi1 x2 xi2 z1 z2 zbar1 zbar2 X1 X2 X3 lambda H0 H01 H02 I``.
Reduced coordinates and ``lambda`` are read through their phase-space
pullbacks, so every literal denotes an :class:`OscillatorPolynomial`.
Division is allowed only by constants.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from . import polynomial as P
from .polynomial import OscillatorPolynomial
from .reduced import ReducedPolynomial, reduce

NAMES: dict[str, OscillatorPolynomial] = {
    "x1": P.X1_P, "xi1": P.XI1_P, "x2": P.X2_P, "xi2": P.XI2_P,
    "z1": P.Z1_P, "z2": P.Z2_P, "zbar1": P.ZB1_P, "zbar2": P.ZB2_P,
    "X1": P.PX1, "X2": P.PX2, "X3": P.PX3, "lambda": P.H0,
    "H0": P.H0, "H01": P.H01, "H02": P.H02,
    "I": OscillatorPolynomial.constant(1j),
}

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(\*\*|[-+*/^()]))")


class ParseError(ValueError):
    """Malformed literal; ``token`` and ``position`` locate the problem."""

    def __init__(self, message: str, token: str, position: int):
        super().__init__(f"{message}: {token!r} at position {position}")
        self.token = token
        self.position = position


@dataclass(frozen=True)
class _Tok:
    kind: str  # "num", "name", "op", "end"
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = text[pos:].lstrip()
            start = len(text) - len(bad)
            raise ParseError("unexpected character", bad[:1], start)
        start = m.start(m.lastindex)
        if m.group(1):
            out.append(_Tok("num", m.group(1), start))
        elif m.group(2):
            out.append(_Tok("name", m.group(2), start))
        else:
            out.append(_Tok("op", m.group(3), start))
        pos = m.end()
    out.append(_Tok("end", "<end>", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_end(self):
        t = self.peek()
        if t.kind != "end":
            raise ParseError("unexpected token", t.text, t.pos)

    def expr(self) -> OscillatorPolynomial:
        val = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            rhs = self.term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self) -> OscillatorPolynomial:
        val = self.unary()
        while self.peek().kind == "op" and self.peek().text in ("*", "/"):
            op = self.take()
            rhs = self.unary()
            if op.text == "*":
                val = val * rhs
            else:
                t = rhs.terms
                if any(k != (0, 0, 0, 0) for k in t) or not t:
                    raise ParseError("division by a non-constant or zero expression", op.text, op.pos)
                val = val / t[(0, 0, 0, 0)]
        return val

    def unary(self) -> OscillatorPolynomial:
        t = self.peek()
        if t.kind == "op" and t.text in "+-":
            self.take()
            v = self.unary()
            return v if t.text == "+" else -v
        return self.power()

    def power(self) -> OscillatorPolynomial:
        base = self.atom()
        t = self.peek()
        if t.kind == "op" and t.text in ("^", "**"):
            self.take()
            e = self.take()
            if e.kind != "num" or not e.text.isdigit():
                raise ParseError("exponent must be a non-negative integer", e.text, e.pos)
            return base ** int(e.text)
        return base

    def atom(self) -> OscillatorPolynomial:
        t = self.take()
        if t.kind == "num":
            return OscillatorPolynomial.constant(Fraction(t.text))
        if t.kind == "name":
            if t.text not in NAMES:
                raise ParseError("unknown name", t.text, t.pos)
            return NAMES[t.text]
        if t.kind == "op" and t.text == "(":
            v = self.expr()
            close = self.take()
            if close.kind != "op" or close.text != ")":
                raise ParseError("expected ')'", close.text, close.pos)
            return v
        raise ParseError("unexpected token", t.text, t.pos)


def parse_polynomial(text: str) -> OscillatorPolynomial:
    """Parse a literal such as ``"0.5*(x1*x2 + xi1*xi2)"``.

    Raises
    ------
    ParseError
        With the offending token and its position.
    """
    if not isinstance(text, str):
        raise TypeError("polynomial literal must be a string")
    p = _Parser(text)
    val = p.expr()
    p.expect_end()
    return val


def parse_reduced(text: str) -> ReducedPolynomial:
    """Parse a literal and descend it to the reduced spheres."""
    return reduce(parse_polynomial(text))
