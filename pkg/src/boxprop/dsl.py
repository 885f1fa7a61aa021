"""Reader for system files.

    # comment
    var x in [-2, 2];
    var y in [-inf, 3.5];
    x^2 + y^2 - 1 <= 0;
    x - y >= 0;          # sugar for  -(x - y) <= 0
    x * y = 1;           # sugar for  x*y - 1 <= 0  and  -(x*y - 1) <= 0
"""

from __future__ import annotations

from .expression import (
    Binary,
    Const,
    Expr,
    Parser,
    SystemSpec,
    Unary,
    occurrences,
    tokenize,
)
from .interval import Interval, parse_float_token

__all__ = ["parse_system", "load_system"]

_RELATIONS = ("<=", ">=", "=", "==")


def _is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and float(e.text) == 0.0


def _difference(lhs: Expr, rhs: Expr) -> Expr:
    return lhs if _is_zero(rhs) else Binary("-", lhs, rhs)


class _SystemParser(Parser):
    def bound(self, direction: str) -> float:
        sign = ""
        if self.tok.kind == "op" and self.tok.text in "+-":
            sign = self.advance().text
        tok = self.tok
        if tok.kind == "num" or (tok.kind == "ident" and tok.text.lower() in ("inf", "infinity")):
            self.advance()
            value = parse_float_token(sign + tok.text, direction)
            return value
        raise self.error("expected a number or 'inf' as interval bound")

    def declaration(self, variables: dict[str, Interval]) -> None:
        name_tok = self.tok
        if name_tok.kind != "ident":
            raise self.error("expected a variable name after 'var'")
        self.advance()
        if not (self.tok.kind == "ident" and self.tok.text == "in"):
            raise self.error("expected 'in'")
        self.advance()
        self.expect("[")
        lo = self.bound("down")
        self.expect(",")
        hi = self.bound("up")
        self.expect("]")
        if name_tok.text in variables:
            raise self.error(f"variable {name_tok.text!r} declared twice", name_tok)
        try:
            variables[name_tok.text] = Interval.of(lo, hi)
        except ValueError as exc:
            raise self.error(str(exc), name_tok) from None

    def constraint(self, variables: dict[str, Interval], out: list[Expr]) -> None:
        start = self.tok
        lhs = self.expr()
        tok = self.tok
        if not (tok.kind == "op" and tok.text in _RELATIONS):
            raise self.error("expected '<=', '>=' or '=' after expression")
        self.advance()
        rhs = self.expr()
        for name in list(occurrences(lhs)) + list(occurrences(rhs)):
            if name not in variables:
                raise self.error(f"undeclared variable {name!r}", start)
        g = _difference(lhs, rhs)
        if tok.text == "<=":
            out.append(g)
        elif tok.text == ">=":
            out.append(Unary("neg", g))
        else:
            out.append(g)
            out.append(Unary("neg", g))

    def system(self) -> SystemSpec:
        variables: dict[str, Interval] = {}
        inequalities: list[Expr] = []
        while self.tok.kind != "eof":
            if self.accept(";"):
                continue
            if self.tok.kind == "ident" and self.tok.text == "var":
                self.advance()
                self.declaration(variables)
            else:
                self.constraint(variables, inequalities)
            if self.tok.kind != "eof":
                self.expect(";")
        return SystemSpec(variables, tuple(inequalities))


def parse_system(text: str) -> SystemSpec:
    """Parse a system file; raises :class:`ParseError` with line and column."""
    return _SystemParser(tokenize(text)).system()


def load_system(path: str) -> SystemSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read())
