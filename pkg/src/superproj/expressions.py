"""Parser and printer for the kernel's expression grammar.

Grammar (round-trip stable with :func:`format_super`)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ['^' ['-'] INTEGER]
    atom    := INTEGER | NAME | '(' expr ')'

Names are the coordinate names of the dimension at hand (``x1..xn`` even,
``th1..thm`` odd for default dimensions).  Division requires the divisor to
be a nonzero even scalar free of odd generators; rational constants like
``3/4`` are the special case of constant operands.
"""

from __future__ import annotations

import re

from .errors import ParseError, UnknownCoordinate
from .graded_algebra import Dimension, SuperFunction

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|([()+\-*/^]))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        if text[pos] == "\n":
            line += 1
            line_start = pos + 1
            pos += 1
            continue
        match = _TOKEN.match(text, pos)
        if not match or match.end() == pos:
            raise ParseError(
                f"unexpected character {text[pos]!r}", line, pos - line_start)
        number, name, op = match.groups()
        col = match.start(1 if number else 2 if name else 3) - line_start
        if number is not None:
            tokens.append(("num", int(number), line, col))
        elif name is not None:
            tokens.append(("name", name, line, col))
        else:
            tokens.append(("op", op, line, col))
        pos = match.end()
    tokens.append(("end", "", line, len(text) - line_start))
    return tokens


class _Parser:
    def __init__(self, dim: Dimension, text: str):
        self.dim = dim
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, tok[2], tok[3])

    def parse(self) -> SuperFunction:
        value = self.expr()
        if self.peek()[0] != "end":
            self.error(f"trailing input {self.peek()[1]!r}")
        return value

    def expr(self):
        value = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self):
        value = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            tok = self.take()
            rhs = self.unary()
            if tok[1] == "*":
                value = value * rhs
            else:
                if not rhs.is_even_scalar():
                    self.error("division by an expression with odd generators", tok)
                if rhs.is_zero():
                    self.error("division by zero", tok)
                value = value / rhs
        return value

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return -self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            tok = self.take()
            negate = False
            if self.peek()[:2] == ("op", "-"):
                self.take()
                negate = True
            etok = self.take()
            if etok[0] != "num":
                self.error("exponent must be an integer literal", etok)
            exp = -etok[1] if negate else etok[1]
            if exp < 0 and not base.is_even_scalar():
                self.error("negative power of an expression with odd generators", tok)
            if exp < 0 and base.is_zero():
                self.error("negative power of zero", tok)
            return base ** exp
        return base

    def atom(self):
        tok = self.take()
        kind, value = tok[0], tok[1]
        if kind == "num":
            return SuperFunction.constant(self.dim, value)
        if kind == "name":
            try:
                idx = self.dim.index(value)
            except UnknownCoordinate:
                self.error(f"unknown coordinate {value!r}", tok)
            return SuperFunction.coordinate(self.dim, idx)
        if (kind, value) == ("op", "("):
            inner = self.expr()
            closing = self.take()
            if closing[:2] != ("op", ")"):
                self.error("expected ')'", closing)
            return inner
        self.error(f"unexpected token {value!r}", tok)


def parse_expression(dim: Dimension, text: str) -> SuperFunction:
    """Parse an expression string over the given dimension."""
    return _Parser(dim, text).parse()


GRAMMAR_HELP = """\
expr    := term (('+' | '-') term)*
term    := unary (('*' | '/') unary)*
unary   := '-' unary | power
power   := atom ['^' ['-'] INTEGER]
atom    := INTEGER | NAME | '(' expr ')'

NAME    : even coordinates x1..xn, odd coordinates th1..thm
          (the Thomas chart adds the even coordinate x0)
INTEGER : nonnegative decimal literal; rationals are written p/q
Division and negative powers require an even divisor free of odd
generators.
"""


def _coeff_str(q) -> str:
    num, den = int(q.numerator), int(q.denominator)
    return f"{num}/{den}" if den != 1 else str(num)


def _poly_str(poly, even_names) -> str:
    parts = []
    for monom, coeff in sorted(poly.terms(), key=lambda t: t[0], reverse=True):
        factors = []
        for name, e in zip(even_names, monom):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        cs = _coeff_str(coeff)
        if factors and cs == "1":
            text = "*".join(factors)
        elif factors and cs == "-1":
            text = "-" + "*".join(factors)
        elif factors:
            text = cs + "*" + "*".join(factors)
        else:
            text = cs
        parts.append(text)
    if not parts:
        return "0"
    out = parts[0]
    for part in parts[1:]:
        out += " - " + part[1:] if part.startswith("-") else " + " + part
    return out


def _is_single_term(poly) -> bool:
    return len(poly.terms()) == 1


def format_scalar(coeff, even_names) -> str:
    """Print a field element as (num)/(den) in the grammar."""
    num, den = coeff.numer, coeff.denom
    num_str = _poly_str(num, even_names)
    if den == den.ring.one:
        return num_str
    den_str = _poly_str(den, even_names)
    if not _is_single_term(num):
        num_str = f"({num_str})"
    if not _is_single_term(den) or not den_str.lstrip("-").isdigit():
        den_str = f"({den_str})"
    return f"{num_str}/{den_str}"


def format_super(f: SuperFunction) -> str:
    """Canonical printing of a SuperFunction; round-trips through parse."""
    if f.is_zero():
        return "0"
    dim = f.dim
    parts = []
    for key in sorted(f.terms, key=lambda k: (len(k), k)):
        coeff = f.terms[key]
        cs = format_scalar(coeff, dim.even_names)
        odd = [dim.odd_names[slot] for slot in key]
        if odd:
            if cs == "1":
                cs = ""
            elif cs == "-1":
                cs = "-"
            elif not _is_single_term(coeff.numer) or coeff.denom != coeff.denom.ring.one:
                cs = f"({cs})*"
            else:
                cs = f"{cs}*"
            parts.append(cs + "*".join(odd))
        else:
            parts.append(cs)
    out = parts[0]
    for part in parts[1:]:
        out += " - " + part[1:] if part.startswith("-") else " + " + part
    return out
