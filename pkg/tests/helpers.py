"""Random generators and exact oracles shared by the test modules."""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import numpy as np

from boxprop import interval as ia
from boxprop.expression import Binary, Const, Pow, SystemSpec, Unary, Var
from boxprop.interval import Interval

# ---------------------------------------------------------------------------
# intervals


def dyadic(rng: random.Random, lo: float, hi: float, bits: int = 8) -> float:
    """A float on the grid of step 2**-bits in [lo, hi]; products of two stay exact."""
    scale = 1 << bits
    return rng.randint(math.ceil(lo * scale), math.floor(hi * scale)) / scale


def rand_interval(rng: random.Random, span: float = 4.0, unbounded: float = 0.0, bits: int = 8) -> Interval:
    a, b = sorted((dyadic(rng, -span, span, bits), dyadic(rng, -span, span, bits)))
    if rng.random() < unbounded:
        a = -math.inf
    if rng.random() < unbounded:
        b = math.inf
    return Interval(a, b)


def rand_subinterval(rng: random.Random, d: Interval) -> Interval:
    lo = -8.0 if d.lo == -math.inf else d.lo
    hi = 8.0 if d.hi == math.inf else d.hi
    if lo > hi:
        return d
    a, b = sorted((rng.uniform(lo, hi), rng.uniform(lo, hi)))
    if d.lo == -math.inf and rng.random() < 0.5:
        a = -math.inf
    if d.hi == math.inf and rng.random() < 0.5:
        b = math.inf
    return Interval(a, b)


def sample_in(rng: random.Random, d: Interval, bits: int = 8) -> float:
    lo = max(d.lo, -16.0)
    hi = min(d.hi, 16.0)
    return dyadic(rng, lo, hi, bits) if math.ceil(lo * (1 << bits)) <= math.floor(hi * (1 << bits)) else lo


def ulp_hull(x: float) -> Interval:
    """Interval guaranteed to hold the real value a correctly-rounded-to-1ulp libm result approximates."""
    return Interval(ia.pred(x), ia.succ(x))


# ---------------------------------------------------------------------------
# expressions

RATIONAL_OPS = ("+", "-", "*", "/")
CORPUS_OPS = ("+", "-", "*", "/", "exp", "sqrt", "pow")


class NameSource:
    def __init__(self):
        self.n = 0

    def __call__(self) -> str:
        self.n += 1
        return f"x{self.n}"


def random_expr(rng: random.Random, depth: int, ops=CORPUS_OPS, fresh=None, leaf_p: float = 0.25, names=None):
    """Random expression; with ``names`` leaves draw from that pool (repeats allowed),
    otherwise every variable leaf is a fresh name."""
    fresh = fresh or NameSource()
    if depth == 0 or rng.random() < leaf_p:
        if rng.random() < 0.2:
            return Const(str(dyadic(rng, 0.25, 3.0, 2)))
        return Var(rng.choice(names) if names else fresh())
    op = rng.choice(ops)
    if op in ("exp", "sqrt", "sin", "cos", "neg", "log"):
        return Unary(op, random_expr(rng, depth - 1, ops, fresh, leaf_p, names))
    if op == "pow":
        return Pow(random_expr(rng, depth - 1, ops, fresh, leaf_p, names), rng.randint(2, 3))
    left = random_expr(rng, depth - 1, ops, fresh, leaf_p, names)
    right = random_expr(rng, depth - 1, ops, fresh, leaf_p, names)
    return Binary(op, left, right)


def expr_depth(e) -> int:
    if isinstance(e, (Const, Var)):
        return 0
    if isinstance(e, (Unary, Pow)):
        return 1 + expr_depth(e.arg)
    return 1 + max(expr_depth(e.left), expr_depth(e.right))


# ---------------------------------------------------------------------------
# exact point evaluation


class Undefined(Exception):
    pass


def eval_exact(e, env: dict[str, Fraction]) -> Fraction:
    """Exact value for rational expressions (no transcendental operators)."""
    if isinstance(e, Const):
        return Fraction(e.text)
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Pow):
        return eval_exact(e.arg, env) ** e.k
    if isinstance(e, Unary):
        if e.op == "neg":
            return -eval_exact(e.arg, env)
        raise TypeError(f"{e.op} has no exact rational value")
    a = eval_exact(e.left, env)
    b = eval_exact(e.right, env)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if b == 0:
        raise Undefined
    return a / b


def is_solution(s: SystemSpec, point: dict[str, float]) -> bool:
    env = {n: Fraction(v) for n, v in point.items()}
    try:
        return all(eval_exact(g, env) <= 0 for g in s.inequalities)
    except Undefined:
        return False


def vectorized(e):
    """numpy evaluator for an expression over a dict of column arrays."""
    if isinstance(e, Const):
        v = float(e.text)
        return lambda env: v
    if isinstance(e, Var):
        return lambda env: env[e.name]
    if isinstance(e, Pow):
        f = vectorized(e.arg)
        return lambda env: f(env) ** e.k
    if isinstance(e, Unary):
        f = vectorized(e.arg)
        fn = {"neg": np.negative, "exp": np.exp, "sqrt": np.sqrt, "sin": np.sin, "cos": np.cos, "log": np.log}[e.op]
        return lambda env: fn(f(env))
    l, r = vectorized(e.left), vectorized(e.right)
    fn = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide}[e.op]
    return lambda env: fn(l(env), r(env))


def sample_solutions(s: SystemSpec, box: dict[str, Interval], n: int, rng: np.random.Generator, max_draws: int = 40):
    """Up to ``n`` points of ``box`` that exactly satisfy the rational system ``s``.

    Candidates are drawn on a dyadic grid, screened in floating point, and
    any candidate within a small band of a constraint boundary is decided
    with exact rational arithmetic.
    """
    names = list(box)
    fns = [vectorized(g) for g in s.inequalities]
    found = []
    total = 0
    for _ in range(max_draws):
        cols = {}
        for name in names:
            d = box[name]
            lo, hi = max(d.lo, -1e3), min(d.hi, 1e3)
            c = rng.uniform(lo, hi, 4 * n)
            cols[name] = np.clip(np.round(c * 2.0**20) / 2.0**20, lo, hi)
        with np.errstate(all="ignore"):
            vals = [np.broadcast_to(f(cols), (4 * n,)) for f in fns]
        clear = np.ones(4 * n, dtype=bool)
        unsure = np.zeros(4 * n, dtype=bool)
        for v in vals:
            band = 1e-9 * (1.0 + np.abs(v))
            clear &= v <= -band
            unsure |= (np.abs(v) < band) | ~np.isfinite(v)
        unsure &= ~clear
        ok = clear.copy()
        for i in np.flatnonzero(unsure):
            if is_solution(s, {name: float(cols[name][i]) for name in names}):
                ok[i] = True
        # any point neither clear nor near the boundary violates some inequality
        idx = np.flatnonzero(ok)
        for i in idx[: n - total]:
            found.append({name: float(cols[name][i]) for name in names})
        total = len(found)
        if total >= n:
            break
    return found


def box_contains_point(box: dict[str, Interval], point: dict[str, float]) -> bool:
    return all(box[n].lo <= x <= box[n].hi for n, x in point.items())


def subset_box(a: dict[str, Interval] | None, b: dict[str, Interval] | None) -> bool:
    """``a`` inside ``b``; None stands for the empty box."""
    if a is None:
        return True
    if b is None:
        return False
    return all(a[n].subset_of(b[n]) for n in a)


# ---------------------------------------------------------------------------
# exact interval evaluation over the rationals


def exact_range(e, env: dict[str, tuple[Fraction, Fraction]]):
    """Natural interval extension computed without rounding; None if a
    division meets a denominator containing zero."""
    if isinstance(e, Const):
        v = Fraction(e.text)
        return v, v
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Pow):
        a = exact_range(e.arg, env)
        if a is None:
            return None
        lo, hi = a
        vals = [lo**e.k, hi**e.k]
        if e.k % 2 == 0 and lo <= 0 <= hi:
            vals.append(Fraction(0))
        return min(vals), max(vals)
    if isinstance(e, Unary):
        a = exact_range(e.arg, env)
        if e.op != "neg":
            raise TypeError(e.op)
        return None if a is None else (-a[1], -a[0])
    a, b = exact_range(e.left, env), exact_range(e.right, env)
    if a is None or b is None:
        return None
    if e.op == "+":
        return a[0] + b[0], a[1] + b[1]
    if e.op == "-":
        return a[0] - b[1], a[1] - b[0]
    if e.op == "/":
        if b[0] <= 0 <= b[1]:
            return None
        b = (1 / b[1], 1 / b[0])
    prods = [x * y for x in a for y in b]
    return min(prods), max(prods)


# ---------------------------------------------------------------------------
# grid oracle for ternary relations


def grid_projection(X, Y, Z, relation, steps=400, span=50.0):
    """Hull, per coordinate, of grid points of the box satisfying ``relation``.

    Unbounded sides are truncated at ``span``; points are dyadic so the
    relation is decided exactly.
    """
    def grid(d):
        lo, hi = max(d.lo, -span), min(d.hi, span)
        return sorted({Fraction(lo) + (Fraction(hi) - Fraction(lo)) * k / steps for k in range(steps + 1)})

    hits = [[], [], []]
    for x, y in itertools.product(grid(X), grid(Y)):
        z = relation(x, y)
        if z is None:
            continue
        if (Z.lo == -math.inf or Z.lo <= z) and (Z.hi == math.inf or z <= Z.hi):
            hits[0].append(x)
            hits[1].append(y)
            hits[2].append(z)
    return [(min(h), max(h)) if h else None for h in hits]
