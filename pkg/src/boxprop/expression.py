"""Arithmetic expression trees, the infix parser, and system rewriting."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

from . import interval as ia
from .interval import Interval

__all__ = [
    "Const",
    "Var",
    "Unary",
    "Pow",
    "Binary",
    "Expr",
    "ParseError",
    "UnboundVariableError",
    "SystemSpec",
    "parse",
    "render",
    "to_sexpr",
    "eval_natural",
    "variables",
    "occurrences",
    "rewrite_single_occurrence",
]

FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos")


@dataclass(frozen=True)
class Const:
    text: str

    @property
    def value(self) -> Interval:
        return ia.least_canonical(self.text)


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of FUNCTIONS
    arg: "Expr"


@dataclass(frozen=True)
class Pow:
    arg: "Expr"
    k: int


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Var, Unary, Pow, Binary]


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class UnboundVariableError(KeyError):
    pass


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|<=|>=|==|[-+*/^(),;=\[\]<>])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        for i, ch in enumerate(chunk):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class Parser:
    """Recursive-descent parser over a token list.

    Precedence, tightest first: ``^k``, unary minus, ``* /``, ``+ -``.
    """

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.column)

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if self.tok.kind == "op" and self.tok.text == text:
            return self.advance()
        found = self.tok.text or "end of input"
        raise self.error(f"expected {text!r}, found {found!r}")

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            if self.tok.kind == "op" and self.tok.text == "**":
                raise self.error("'**' is not supported; use '^' with an integer exponent")
            if self.tok.kind == "op" and self.tok.text in "*/":
                op = self.advance().text
                node = Binary(op, node, self.unary())
            else:
                return node

    def unary(self) -> Expr:
        if self.accept("-"):
            return Unary("neg", self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        node = self.atom()
        while True:
            if self.tok.kind == "op" and self.tok.text == "**":
                raise self.error("'**' is not supported; use '^' with an integer exponent")
            if not self.accept("^"):
                return node
            tok = self.tok
            if tok.kind != "num" or not tok.text.isdigit():
                raise self.error("exponent must be a non-negative integer literal")
            self.advance()
            node = Pow(node, int(tok.text))

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Const(tok.text)
        if tok.kind == "ident":
            self.advance()
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(tok.text, arg)
            if self.tok.kind == "op" and self.tok.text == "(":
                raise self.error(f"unknown function {tok.text!r}", tok)
            return Var(tok.text)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}")


def parse(text: str) -> Expr:
    """Parse one arithmetic expression."""
    p = Parser(tokenize(text))
    node = p.expr()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return node


def render(e: Expr) -> str:
    """Fully parenthesised infix form; reparses to the same tree."""
    if isinstance(e, Const):
        return e.text
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{render(e.arg)})"
        return f"{e.op}({render(e.arg)})"
    if isinstance(e, Pow):
        return f"({render(e.arg)} ^ {e.k})"
    return f"({render(e.left)} {e.op} {render(e.right)})"


def to_sexpr(e: Expr) -> str:
    """Prefix form used in golden files, e.g. ``(+ (* x x) x)``."""
    if isinstance(e, Const):
        return e.text
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        return f"({e.op} {to_sexpr(e.arg)})"
    if isinstance(e, Pow):
        return f"(^{e.k} {to_sexpr(e.arg)})"
    return f"({e.op} {to_sexpr(e.left)} {to_sexpr(e.right)})"


# ---------------------------------------------------------------------------
# traversal and evaluation


def occurrences(e: Expr) -> Iterator[str]:
    """Variable names in left-to-right order, with repetition."""
    if isinstance(e, Var):
        yield e.name
    elif isinstance(e, (Unary, Pow)):
        yield from occurrences(e.arg)
    elif isinstance(e, Binary):
        yield from occurrences(e.left)
        yield from occurrences(e.right)


def variables(e: Expr) -> list[str]:
    return list(dict.fromkeys(occurrences(e)))


def is_constant(e: Expr) -> bool:
    return next(occurrences(e), None) is None


def apply_binary(op: str, a: Interval, b: Interval) -> Interval:
    if op == "+":
        return ia.add(a, b)
    if op == "-":
        return ia.sub(a, b)
    if op == "*":
        return ia.mul(a, b)
    if op == "/":
        return ia.div(a, b)
    raise ValueError(f"unknown operator {op!r}")


def eval_natural(e: Expr, env: Mapping[str, Interval]) -> Interval:
    """Bottom-up interval evaluation (the natural interval extension)."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Unary):
        return ia.unary_fn(e.op, eval_natural(e.arg, env))
    if isinstance(e, Pow):
        return ia.pow_k(eval_natural(e.arg, env), e.k)
    return apply_binary(e.op, eval_natural(e.left, env), eval_natural(e.right, env))


# ---------------------------------------------------------------------------
# systems


@dataclass(frozen=True)
class SystemSpec:
    """Inequalities ``g_j <= 0`` over named variables with initial domains.

    ``equivalence_classes`` groups renamed copies that must be equal;
    ``origin`` maps each copy back to the variable it was made from.
    """

    variables: dict[str, Interval]
    inequalities: tuple[Expr, ...]
    equivalence_classes: tuple[tuple[str, ...], ...] = ()
    origin: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        object.__setattr__(
            self, "equivalence_classes", tuple(tuple(c) for c in self.equivalence_classes)
        )
        seen: set[str] = set()
        for cls in self.equivalence_classes:
            if seen.intersection(cls):
                raise ValueError("equivalence classes overlap")
            seen.update(cls)

    @property
    def names(self) -> list[str]:
        return list(self.variables)

    def original_of(self, name: str) -> str:
        return self.origin.get(name, name)

    def original_names(self) -> list[str]:
        return list(dict.fromkeys(self.original_of(n) for n in self.variables))

    def copies_of(self, original: str) -> list[str]:
        return [n for n in self.variables if self.original_of(n) == original]

    def occurrence_counts(self) -> Counter:
        counts: Counter = Counter()
        for g in self.inequalities:
            counts.update(occurrences(g))
        return counts

    def is_single_occurrence(self) -> bool:
        return all(c <= 1 for c in self.occurrence_counts().values())

    def original_box(self, box: Mapping[str, Interval]) -> dict[str, Interval]:
        """Collapse a box over copies to one domain per original variable."""
        out: dict[str, Interval] = {}
        for name, dom in box.items():
            key = self.original_of(name)
            out[key] = ia.intersect(out[key], dom) if key in out else dom
        return out


def _fresh_names(base: str, count: int, taken: set[str]) -> list[str]:
    names = []
    for i in range(1, count + 1):
        cand = f"{base}_{i}"
        while cand in taken:
            cand += "_"
        taken.add(cand)
        names.append(cand)
    return names


def _substitute(e: Expr, queues: dict[str, list[str]]) -> Expr:
    if isinstance(e, Var):
        q = queues.get(e.name)
        return Var(q.pop(0)) if q else e
    if isinstance(e, Unary):
        return Unary(e.op, _substitute(e.arg, queues))
    if isinstance(e, Pow):
        return Pow(_substitute(e.arg, queues), e.k)
    if isinstance(e, Binary):
        left = _substitute(e.left, queues)
        return Binary(e.op, left, _substitute(e.right, queues))
    return e


def rewrite_single_occurrence(s: SystemSpec) -> SystemSpec:
    """Give every variable occurrence its own name, linked by equivalence classes.

    A variable with ``c > 1`` occurrences across the whole system becomes
    ``x_1 .. x_c`` (in left-to-right order over the inequalities), each
    with the original domain.  Single-occurrence variables are untouched.
    """
    counts = s.occurrence_counts()
    taken = set(s.variables)
    queues: dict[str, list[str]] = {}
    variables: dict[str, Interval] = {}
    classes = list(s.equivalence_classes)
    origin = dict(s.origin)
    for name, dom in s.variables.items():
        c = counts.get(name, 0)
        if c <= 1:
            variables[name] = dom
            continue
        fresh = _fresh_names(name, c, taken)
        queues[name] = list(fresh)
        for f in fresh:
            variables[f] = dom
            origin[f] = s.original_of(name)
        # an already-classed variable is replaced by its copies in its class
        merged = False
        for i, cls in enumerate(classes):
            if name in cls:
                classes[i] = tuple(m for m in cls if m != name) + tuple(fresh)
                merged = True
        if not merged:
            classes.append(tuple(fresh))
    for name in counts:
        if name not in s.variables:
            raise UnboundVariableError(name)
    inequalities = tuple(_substitute(g, queues) for g in s.inequalities)
    return SystemSpec(variables, inequalities, tuple(classes), origin)
