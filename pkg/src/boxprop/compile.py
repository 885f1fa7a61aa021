"""Translation of inequality systems into CSPs of primitive constraints.

Every internal node of an expression tree gets a fresh internal variable
and one primitive constraint; the root additionally gets a bound
constraint.  Subtraction and division reuse the sum and product kernels:

    x - y = z   becomes   z + y = x
    x / y = z   becomes   z * y = x
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from . import interval as ia
from .expression import (
    Const,
    Expr,
    Pow,
    SystemSpec,
    Unary,
    Var,
    eval_natural,
    is_constant,
    occurrences,
    render,
)
from .interval import WHOLE, Interval

__all__ = [
    "VariableId",
    "Sum",
    "Prod",
    "UnaryLink",
    "Bound",
    "AllEq",
    "Constraint",
    "Csp",
    "CompileError",
    "compile_expression",
    "compile_system",
    "peripheral_set",
]

EXTERNAL, INTERNAL, CONSTANT = "external", "internal", "constant"


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class VariableId:
    index: int
    kind: str
    name: str


@dataclass(frozen=True)
class Sum:
    """x + y = z"""

    x: int
    y: int
    z: int

    @property
    def vars(self) -> tuple[int, ...]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class Prod:
    """x * y = z"""

    x: int
    y: int
    z: int

    @property
    def vars(self) -> tuple[int, ...]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class UnaryLink:
    """fn(x) = y; ``k`` is the exponent when ``fn == "pow"``."""

    fn: str
    x: int
    y: int
    k: int = 0

    @property
    def vars(self) -> tuple[int, ...]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Bound:
    """``v <= bound`` (relation "le") or ``v >= bound`` (relation "ge")."""

    v: int
    relation: str = "le"
    bound: float = 0.0

    @classmethod
    def le_zero(cls, v: int) -> "Bound":
        return cls(v, "le", 0.0)

    @classmethod
    def greater_than(cls, v: int, a: float) -> "Bound":
        # strict x > a on float domains is x >= succ(a)
        return cls(v, "ge", ia.succ(a))

    @classmethod
    def less_than(cls, v: int, a: float) -> "Bound":
        return cls(v, "le", ia.pred(a))

    @property
    def vars(self) -> tuple[int, ...]:
        return (self.v,)

    def region(self) -> Interval:
        if self.relation == "le":
            return Interval(-math.inf, self.bound)
        return Interval(self.bound, math.inf)


@dataclass(frozen=True)
class AllEq:
    members: tuple[int, ...]

    @property
    def vars(self) -> tuple[int, ...]:
        return self.members


Constraint = Union[Sum, Prod, UnaryLink, Bound, AllEq]


@dataclass
class Csp:
    """Variables, initial domains and primitive constraints.

    ``depth[c]`` is the tree level of constraint ``c`` (root bound 0, the
    root node's constraint 1, ...; AllEq is ``inf``).  ``expr_of[c]`` is the
    source inequality, ``None`` for AllEq.  ``roots[j]`` is the variable
    holding the value of inequality ``j``.
    """

    variables: list[VariableId]
    domains: list[Interval]
    constraints: list[Constraint]
    depth: list[float]
    expr_of: list[Optional[int]]
    roots: list[int]
    origin: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        watchers: list[list[int]] = [[] for _ in self.variables]
        for ci, c in enumerate(self.constraints):
            for v in dict.fromkeys(c.vars):
                watchers[v].append(ci)
        self.watchers = watchers
        self.is_internal = [v.kind == INTERNAL for v in self.variables]
        self._by_name = {v.name: v.index for v in self.variables}
        self._fragments: dict[int, Csp] = {}

    # -- lookup -------------------------------------------------------------

    def index(self, name: str) -> int:
        return self._by_name[name]

    def name(self, index: int) -> str:
        return self.variables[index].name

    def externals(self) -> list[VariableId]:
        return [v for v in self.variables if v.kind == EXTERNAL]

    def copies_of(self, original: str) -> list[int]:
        return [
            v.index
            for v in self.variables
            if v.kind == EXTERNAL and self.origin.get(v.name, v.name) == original
        ]

    def internal_count(self, ci: int) -> int:
        return sum(1 for v in set(self.constraints[ci].vars) if self.is_internal[v])

    def initial_box(self) -> list[Interval]:
        return list(self.domains)

    def box_from(self, domains: dict[str, Interval]) -> list[Interval]:
        """Initial box with external domains overridden by name (or by original name)."""
        box = list(self.domains)
        for v in self.variables:
            if v.kind != EXTERNAL:
                continue
            if v.name in domains:
                box[v.index] = domains[v.name]
            elif self.origin.get(v.name) in domains:
                box[v.index] = domains[self.origin[v.name]]
        return box

    # -- structure -----------------------------------------------------------

    def fragment(self, j: int) -> "Csp":
        """Constraints of inequality ``j`` plus all AllEq constraints."""
        if j not in self._fragments:
            keep = [
                ci for ci, e in enumerate(self.expr_of) if e == j or e is None
            ]
            self._fragments[j] = Csp(
                self.variables,
                self.domains,
                [self.constraints[ci] for ci in keep],
                [self.depth[ci] for ci in keep],
                [self.expr_of[ci] for ci in keep],
                self.roots,
                self.origin,
            )
        return self._fragments[j]

    def without_bounds(self) -> "Csp":
        keep = [ci for ci, c in enumerate(self.constraints) if not isinstance(c, Bound)]
        return Csp(
            self.variables,
            self.domains,
            [self.constraints[ci] for ci in keep],
            [self.depth[ci] for ci in keep],
            [self.expr_of[ci] for ci in keep],
            self.roots,
            self.origin,
        )

    def check_structure(self) -> None:
        """Assert the invariants that make per-expression clusters independent.

        Internal variables belong to exactly one expression; non-root
        internals sit in exactly two constraints; each expression's
        constraint graph is a tree (acyclic and connected through internals).
        """
        owner: dict[int, int] = {}
        for ci, c in enumerate(self.constraints):
            j = self.expr_of[ci]
            for v in c.vars:
                if not self.is_internal[v]:
                    continue
                if j is None:
                    raise AssertionError("AllEq constraint touches an internal variable")
                if owner.setdefault(v, j) != j:
                    raise AssertionError(f"internal {self.name(v)} shared by two expressions")
        roots = set(self.roots)
        for v in self.variables:
            if v.kind != INTERNAL:
                continue
            n = len(self.watchers[v.index])
            if v.index in roots:
                if n not in (1, 2):
                    raise AssertionError(f"root {v.name} in {n} constraints")
            elif n != 2:
                raise AssertionError(f"internal {v.name} in {n} constraints")
        for c in self.constraints:
            vs = c.vars
            if not isinstance(c, AllEq) and len(set(vs)) != len(vs):
                raise AssertionError(f"constraint repeats a variable: {c}")
            if isinstance(c, AllEq) and len(vs) < 2:
                raise AssertionError("AllEq with fewer than two members")
        # acyclicity: the constraint/variable incidence graph of each
        # expression must be a forest
        by_expr: dict[int, list[int]] = defaultdict(list)
        for ci, j in enumerate(self.expr_of):
            if j is not None:
                by_expr[j].append(ci)
        for j, cis in by_expr.items():
            nodes = set()
            for ci in cis:
                nodes.add(("c", ci))
                for v in set(self.constraints[ci].vars):
                    if self.variables[v].kind == CONSTANT:
                        continue
                    nodes.add(("v", v))
            if not _is_forest(nodes, cis, self):
                raise AssertionError(f"constraint graph of expression {j} has a cycle")

    def dump(self) -> str:
        """One constraint per line, for golden files and debugging."""
        lines = []
        for ci, c in enumerate(self.constraints):
            d = self.depth[ci]
            depth = "inf" if d == math.inf else str(int(d))
            tag = "P" if self.internal_count(ci) <= 1 else " "
            lines.append(f"{tag} d={depth:<3} {self.describe(c)}")
        return "\n".join(lines)

    def describe(self, c: Constraint) -> str:
        n = self.name
        if isinstance(c, Sum):
            return f"{n(c.x)} + {n(c.y)} = {n(c.z)}"
        if isinstance(c, Prod):
            return f"{n(c.x)} * {n(c.y)} = {n(c.z)}"
        if isinstance(c, UnaryLink):
            fn = f"pow{c.k}" if c.fn == "pow" else c.fn
            return f"{fn}({n(c.x)}) = {n(c.y)}"
        if isinstance(c, Bound):
            op = "<=" if c.relation == "le" else ">="
            return f"{n(c.v)} {op} {ia.format_float(c.bound)}"
        return "allEq(" + ", ".join(n(m) for m in c.members) + ")"


def _is_forest(nodes: set, cis: Sequence[int], csp: Csp) -> bool:
    adj: dict = defaultdict(list)
    for ci in cis:
        for v in set(csp.constraints[ci].vars):
            if csp.variables[v].kind == CONSTANT:
                continue
            adj[("c", ci)].append(("v", v))
            adj[("v", v)].append(("c", ci))
    seen: set = set()
    for start in nodes:
        if start in seen:
            continue
        seen.add(start)
        queue = deque([(start, None)])
        while queue:
            node, parent = queue.popleft()
            for nxt in adj[node]:
                if nxt == parent:
                    continue
                if nxt in seen:
                    return False
                seen.add(nxt)
                queue.append((nxt, node))
    return True


# ---------------------------------------------------------------------------
# builder


class _Builder:
    def __init__(self, externals: dict[str, Interval], origin: dict[str, str]):
        self.variables: list[VariableId] = []
        self.domains: list[Interval] = []
        self.constraints: list[Constraint] = []
        self.depth: list[float] = []
        self.expr_of: list[Optional[int]] = []
        self.roots: list[int] = []
        self.origin = origin
        self.ext: dict[str, int] = {}
        self.env = externals
        self._internal = 0
        for name, dom in externals.items():
            self.ext[name] = self._new(EXTERNAL, name, dom)

    def _new(self, kind: str, name: str, dom: Interval) -> int:
        i = len(self.variables)
        self.variables.append(VariableId(i, kind, name))
        self.domains.append(dom)
        return i

    def _emit(self, c: Constraint, depth: float, j: Optional[int]) -> None:
        self.constraints.append(c)
        self.depth.append(depth)
        self.expr_of.append(j)

    def node(self, e: Expr, depth: int, j: int) -> int:
        """Variable holding the value of ``e``; ``depth`` is its constraint level."""
        if isinstance(e, Var):
            if e.name not in self.ext:
                raise CompileError(f"variable {e.name!r} has no domain")
            return self.ext[e.name]
        if isinstance(e, Const) or is_constant(e):
            value = eval_natural(e, {})
            return self._new(CONSTANT, render(e), value)
        self._internal += 1
        v = self._new(INTERNAL, f"%{self._internal}", WHOLE)
        if isinstance(e, Unary):
            x = self.node(e.arg, depth + 1, j)
            self._emit(UnaryLink(e.op, x, v), depth, j)
        elif isinstance(e, Pow):
            x = self.node(e.arg, depth + 1, j)
            self._emit(UnaryLink("pow", x, v, e.k), depth, j)
        else:
            left = self.node(e.left, depth + 1, j)
            right = self.node(e.right, depth + 1, j)
            if e.op == "+":
                c: Constraint = Sum(left, right, v)
            elif e.op == "-":
                c = Sum(v, right, left)
            elif e.op == "*":
                c = Prod(left, right, v)
            else:
                c = Prod(v, right, left)
            self._emit(c, depth, j)
        return v

    def expression(self, e: Expr, j: int, root_relation: Optional[str], allow_repeats: bool):
        if not allow_repeats:
            seen: set[str] = set()
            for name in occurrences(e):
                if name in seen:
                    raise CompileError(
                        f"variable {name!r} occurs more than once in {render(e)}; "
                        "rewrite the system to single-occurrence form first"
                    )
                seen.add(name)
        root = self.node(e, 1, j)
        self.roots.append(root)
        if root_relation == "le0":
            self._emit(Bound.le_zero(root), 0, j)
        elif root_relation is not None:
            raise ValueError(f"unknown root relation {root_relation!r}")

    def build(self) -> Csp:
        return Csp(
            self.variables,
            self.domains,
            self.constraints,
            self.depth,
            self.expr_of,
            self.roots,
            self.origin,
        )


def compile_expression(
    e: Expr,
    root_relation: Optional[str] = "le0",
    domains: Optional[dict[str, Interval]] = None,
    *,
    allow_repeats: bool = False,
) -> Csp:
    """Compile one expression; ``root_relation`` is ``"le0"`` or ``None``.

    Variables without a given domain start as the whole real line.
    """
    env = {name: WHOLE for name in occurrences(e)}
    if domains:
        env.update({k: v for k, v in domains.items() if k in env})
    b = _Builder(env, {})
    b.expression(e, 0, root_relation, allow_repeats)
    return b.build()


def compile_system(
    s: SystemSpec,
    root_relation: Optional[str] = "le0",
    *,
    allow_repeats: bool = False,
) -> Csp:
    """Compile every inequality and add one AllEq per equivalence class."""
    b = _Builder(dict(s.variables), dict(s.origin))
    for j, g in enumerate(s.inequalities):
        b.expression(g, j, root_relation, allow_repeats)
    for cls in s.equivalence_classes:
        members = tuple(b.ext[m] for m in cls if m in b.ext)
        if len(members) >= 2:
            b._emit(AllEq(members), math.inf, None)
    return b.build()


def peripheral_set(c: Csp) -> list[int]:
    """Indices of constraints with at most one internal variable."""
    return [ci for ci in range(len(c.constraints)) if c.internal_count(ci) <= 1]
