"""Floating-point intervals with outward rounding.

Bounds are IEEE doubles or infinities.  Every arithmetic bound is rounded
outward: exact results are kept as-is (detected with error-free
transformations), inexact ones are moved one ulp away from the interior.
Transcendental functions are widened by one ulp around the libm value;
containment for those assumes libm is faithful (error below one ulp).
"""

from __future__ import annotations

import math
import struct
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, NamedTuple, Union

INF = math.inf
MAX = 1.7976931348623157e308
TINY = 5e-324  # least positive subnormal

__all__ = [
    "Interval",
    "IntervalPair",
    "EMPTY",
    "WHOLE",
    "least_canonical",
    "add",
    "sub",
    "mul",
    "neg",
    "div",
    "ext_div",
    "unary_fn",
    "pow_k",
    "hull",
    "intersect",
    "width",
    "midpoint",
    "split",
    "succ",
    "pred",
    "format_float",
    "parse_float_token",
]


def succ(x: float) -> float:
    return math.nextafter(x, INF)


def pred(x: float) -> float:
    return math.nextafter(x, -INF)


# ---------------------------------------------------------------------------
# directed rounding helpers


def _two_sum_err(a: float, b: float, s: float) -> float:
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def add_down(a: float, b: float) -> float:
    s = a + b
    if math.isinf(s):
        if math.isinf(a) or math.isinf(b):
            return s
        return MAX if s > 0 else s
    if _two_sum_err(a, b, s) < 0:
        return pred(s)
    return s


def add_up(a: float, b: float) -> float:
    s = a + b
    if math.isinf(s):
        if math.isinf(a) or math.isinf(b):
            return s
        return s if s > 0 else -MAX
    if _two_sum_err(a, b, s) > 0:
        return succ(s)
    return s


_SPLIT = 134217729.0  # 2**27 + 1


def _split(a: float) -> tuple[float, float]:
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod_err(a: float, b: float, p: float) -> float:
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _safe(x: float) -> bool:
    ax = abs(x)
    return 1e-280 < ax < 1e290


def _mul_exact_sign(a: float, b: float, p: float) -> int | None:
    """Sign of (a*b - p), or None when it cannot be computed safely."""
    if p == 0.0 or not (_safe(p) and _safe(a) and _safe(b)):
        return None
    e = _two_prod_err(a, b, p)
    return (e > 0) - (e < 0)


def _underflow(positive: bool, up: bool) -> float:
    """Directed bound for a nonzero exact result that rounded to zero."""
    if up:
        return TINY if positive else 0.0
    return 0.0 if positive else -TINY


def mul_down(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0
    p = a * b
    if math.isinf(a) or math.isinf(b):
        return p
    if p == 0.0:
        return _underflow((a > 0) == (b > 0), False)
    sign = _mul_exact_sign(a, b, p)
    if sign is None:
        return pred(p)
    return pred(p) if sign < 0 else p


def mul_up(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0
    p = a * b
    if math.isinf(a) or math.isinf(b):
        return p
    if p == 0.0:
        return _underflow((a > 0) == (b > 0), True)
    sign = _mul_exact_sign(a, b, p)
    if sign is None:
        return succ(p)
    return succ(p) if sign > 0 else p


def _div_sign(a: float, b: float, q: float) -> int | None:
    """Sign of (a/b - q), or None when unsafe."""
    if not (_safe(a) and _safe(b) and _safe(q)):
        return None
    e = _two_prod_err(q, b, q * b)
    r = (a - q * b) - e
    s = (r > 0) - (r < 0)
    return s if b > 0 else -s


def div_down(a: float, b: float) -> float:
    # b != 0; a, b never both infinite
    if a == 0.0:
        return 0.0
    if math.isinf(b):
        return 0.0  # finite / infinite: zero in the limit
    q = a / b
    if math.isinf(a):
        return q
    if q == 0.0:
        return _underflow((a > 0) == (b > 0), False)
    sign = _div_sign(a, b, q)
    if sign is None:
        return pred(q)
    return pred(q) if sign < 0 else q


def div_up(a: float, b: float) -> float:
    if a == 0.0:
        return 0.0
    if math.isinf(b):
        return 0.0
    q = a / b
    if math.isinf(a):
        return q
    if q == 0.0:
        return _underflow((a > 0) == (b > 0), True)
    sign = _div_sign(a, b, q)
    if sign is None:
        return succ(q)
    return succ(q) if sign > 0 else q


def pow_down(x: float, k: int) -> float:
    """Lower bound of x**k for x >= 0."""
    result, base = 1.0, x
    while k:
        if k & 1:
            result = max(mul_down(result, base), 0.0)
        k >>= 1
        if k:
            base = max(mul_down(base, base), 0.0)
    return result


def pow_up(x: float, k: int) -> float:
    """Upper bound of x**k for x >= 0."""
    result, base = 1.0, x
    while k:
        if k & 1:
            result = mul_up(result, base)
        k >>= 1
        if k:
            base = mul_up(base, base)
    return result


def _root_guess(y: float, k: int) -> float:
    if k == 2:
        return math.sqrt(y)
    try:
        return y ** (1.0 / k)
    except OverflowError:  # pragma: no cover - y finite keeps this in range
        return MAX


def _first_true(test, start: float) -> float:
    """Least non-negative float where the monotone ``test`` holds.

    ``test`` must fail at 0 and hold at inf; the search gallops from
    ``start`` and then bisects over float ordinals.
    """
    n, step = _ordinal(start), 1
    if test(start):
        hi, floor = n, _ordinal(0.0)
        while True:
            m = max(hi - step, floor)
            if not test(_from_ordinal(m)):
                lo = m
                break
            hi, step = m, step * 2
    else:
        lo, ceil = n, _ordinal(INF)
        while True:
            m = min(lo + step, ceil)
            if test(_from_ordinal(m)):
                hi = m
                break
            lo, step = m, step * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if test(_from_ordinal(mid)):
            hi = mid
        else:
            lo = mid
    return _from_ordinal(hi)


def root_down(y: float, k: int) -> float:
    """Largest float r with r**k <= y (by directed rounding), for y >= 0."""
    if y == 0.0 or math.isinf(y):
        return y
    return pred(_first_true(lambda r: pow_up(r, k) > y, _root_guess(y, k)))


def root_up(y: float, k: int) -> float:
    """Smallest float r with r**k >= y (by directed rounding), for y >= 0."""
    if y == 0.0 or math.isinf(y):
        return y
    return _first_true(lambda r: pow_down(r, k) >= y, _root_guess(y, k))


# ---------------------------------------------------------------------------
# interval type


class Interval(NamedTuple):
    """Closed interval ``[lo, hi]``; the empty interval is ``(inf, -inf)``.

    Construct through :meth:`make` (normalising) or :func:`Interval.of`
    (validating).  The plain tuple constructor does no checking.
    """

    lo: float
    hi: float

    @classmethod
    def of(cls, lo: float, hi: float | None = None) -> "Interval":
        """Validated constructor: raises on ``lo > hi`` or NaN bounds."""
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval bound is NaN")
        if lo > hi:
            raise ValueError(f"lower bound {lo!r} exceeds upper bound {hi!r}")
        if lo == INF or hi == -INF:
            raise ValueError("interval contains no real number")
        return cls(lo + 0.0, hi + 0.0)

    @classmethod
    def make(cls, lo: float, hi: float) -> "Interval":
        """Normalising constructor: anything degenerate becomes EMPTY."""
        if not lo <= hi or lo == INF or hi == -INF:
            return EMPTY
        return cls(lo + 0.0, hi + 0.0)

    @classmethod
    def parse(cls, text: str) -> "Interval":
        """Parse ``[lb, rb]`` with decimal literals, rounding outward."""
        body = text.strip()
        if body.lower() in ("empty", "[empty]", "∅"):
            return EMPTY
        if not (body.startswith("[") and body.endswith("]")):
            raise ValueError(f"not an interval literal: {text!r}")
        parts = body[1:-1].split(",")
        if len(parts) != 2:
            raise ValueError(f"not an interval literal: {text!r}")
        lo = parse_float_token(parts[0], "down")
        hi = parse_float_token(parts[1], "up")
        return cls.of(lo, hi)

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    @property
    def is_bounded(self) -> bool:
        return not self.is_empty and self.lo > -INF and self.hi < INF

    @property
    def is_canonical(self) -> bool:
        """Non-empty with no float strictly inside: ``[f, f]`` or ``[f, succ(f)]``."""
        if self.is_empty:
            return False
        return self.lo == self.hi or succ(self.lo) == self.hi

    def contains(self, x: Union[float, "Interval"]) -> bool:
        if isinstance(x, Interval):
            return x.is_empty or (self.lo <= x.lo and x.hi <= self.hi)
        return self.lo <= x <= self.hi

    def subset_of(self, other: "Interval") -> bool:
        return other.contains(self)

    def has_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def __str__(self) -> str:
        return self.to_text()

    def to_text(self, style: str = "17g") -> str:
        if self.is_empty:
            return "empty"
        return f"[{format_float(self.lo, style)}, {format_float(self.hi, style)}]"


EMPTY = Interval(INF, -INF)
WHOLE = Interval(-INF, INF)


class IntervalPair(NamedTuple):
    """At most two disjoint pieces; ``first.hi < second.lo`` when both exist."""

    first: Interval
    second: Interval

    def pieces(self) -> list[Interval]:
        return [p for p in self if not p.is_empty]

    def hull(self) -> Interval:
        if self.second.is_empty:
            return self.first
        if self.first.is_empty:
            return self.second
        return Interval(self.first.lo, self.second.hi)


_EMPTY_PAIR = IntervalPair(EMPTY, EMPTY)


def _pair(a: Interval, b: Interval | None = None) -> IntervalPair:
    if b is None or b.is_empty:
        return IntervalPair(a, EMPTY)
    if a.is_empty:
        return IntervalPair(b, EMPTY)
    if a.hi >= b.lo:
        return IntervalPair(Interval(a.lo, max(a.hi, b.hi)), EMPTY)
    return IntervalPair(a, b)


# ---------------------------------------------------------------------------
# formatting


def format_float(x: float, style: str = "repr") -> str:
    """Round-trip exact rendering: ``repr`` (shortest), ``17g`` or ``hex``."""
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    if style == "hex":
        return float.hex(x)
    if style == "17g":
        return format(x, ".17g")
    return repr(x)


def parse_float_token(token: str, direction: str = "near") -> float:
    """Parse a bound token, rounding decimal literals ``down``/``up``."""
    tok = token.strip().lower()
    if tok in ("inf", "+inf", "infinity", "+infinity"):
        return INF
    if tok in ("-inf", "-infinity"):
        return -INF
    if tok.startswith(("0x", "-0x", "+0x")) or "p" in tok:
        return float.fromhex(tok)
    if direction == "near":
        return float(tok)
    iv = least_canonical(tok)
    return iv.lo if direction == "down" else iv.hi


def least_canonical(x: Union[float, int, str, Decimal, Fraction]) -> Interval:
    """Smallest canonical interval containing the real ``x``.

    Floats map to the point interval; decimal strings that are not
    binary floats map to the two adjacent floats around them.
    """
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            raise ValueError(f"not a finite real: {x!r}")
        return Interval(x + 0.0, x + 0.0)
    if isinstance(x, str):
        try:
            exact = Fraction(Decimal(x.strip()))
        except (ArithmeticError, ValueError) as exc:
            if x.strip().lower().lstrip("+-") in ("inf", "infinity", "nan"):
                raise ValueError(f"not a finite real: {x!r}") from None
            raise ValueError(f"not a decimal literal: {x!r}") from exc
    elif isinstance(x, Decimal):
        if not x.is_finite():
            raise ValueError(f"not a finite real: {x!r}")
        exact = Fraction(x)
    else:
        exact = Fraction(x)
    f = float(exact)
    if math.isinf(f):
        # beyond the largest float: the canonical interval is unbounded on one side
        return Interval(MAX, INF) if exact > 0 else Interval(-INF, -MAX)
    fe = Fraction(f)
    if fe == exact:
        return Interval(f + 0.0, f + 0.0)
    if fe < exact:
        return Interval(f + 0.0, succ(f) + 0.0)
    return Interval(pred(f) + 0.0, f + 0.0)


# ---------------------------------------------------------------------------
# arithmetic


def neg(a: Interval) -> Interval:
    if a.is_empty:
        return EMPTY
    return Interval(-a.hi + 0.0, -a.lo + 0.0)


def add(a: Interval, b: Interval) -> Interval:
    if a.lo > a.hi or b.lo > b.hi:
        return EMPTY
    return Interval(add_down(a.lo, b.lo) + 0.0, add_up(a.hi, b.hi) + 0.0)


def sub(a: Interval, b: Interval) -> Interval:
    if a.lo > a.hi or b.lo > b.hi:
        return EMPTY
    return Interval(add_down(a.lo, -b.hi) + 0.0, add_up(a.hi, -b.lo) + 0.0)


def mul(a: Interval, b: Interval) -> Interval:
    if a.lo > a.hi or b.lo > b.hi:
        return EMPTY
    al, ah, bl, bh = a.lo, a.hi, b.lo, b.hi
    lo = min(mul_down(al, bl), mul_down(al, bh), mul_down(ah, bl), mul_down(ah, bh))
    hi = max(mul_up(al, bl), mul_up(al, bh), mul_up(ah, bl), mul_up(ah, bh))
    return Interval(lo + 0.0, hi + 0.0)


def _div_positive(a: Interval, b: Interval) -> Interval:
    """a / b for b strictly positive."""
    al, ah, bl, bh = a.lo, a.hi, b.lo, b.hi
    lo = div_down(al, bh) if al >= 0.0 else div_down(al, bl)
    hi = div_up(ah, bl) if ah >= 0.0 else div_up(ah, bh)
    return Interval(lo + 0.0, hi + 0.0)


def ext_div(a: Interval, b: Interval) -> IntervalPair:
    """Closure of ``{x / y : x in a, y in b, y != 0}`` as at most two pieces."""
    if a.lo > a.hi or b.lo > b.hi or (b.lo == 0.0 and b.hi == 0.0):
        return _EMPTY_PAIR
    bl, bh = b.lo, b.hi
    if bl > 0.0:
        return _pair(_div_positive(a, b))
    if bh < 0.0:
        return _pair(neg(_div_positive(a, neg(b))))
    al, ah = a.lo, a.hi
    if al == 0.0 and ah == 0.0:
        return _pair(Interval(0.0, 0.0))
    if al < 0.0 < ah:
        return _pair(WHOLE)
    if al >= 0.0:
        # numerator nonnegative
        if al == 0.0:
            if bl < 0.0 < bh:
                return _pair(WHOLE)
            return _pair(Interval(0.0, INF) if bl == 0.0 else Interval(-INF, 0.0))
        left = Interval(-INF, div_up(al, bl) + 0.0) if bl < 0.0 else EMPTY
        right = Interval(div_down(al, bh) + 0.0, INF) if bh > 0.0 else EMPTY
        return _pair(left, right)
    # numerator nonpositive
    if ah == 0.0:
        if bl < 0.0 < bh:
            return _pair(WHOLE)
        return _pair(Interval(-INF, 0.0) if bl == 0.0 else Interval(0.0, INF))
    left = Interval(-INF, div_up(ah, bh) + 0.0) if bh > 0.0 else EMPTY
    right = Interval(div_down(ah, bl) + 0.0, INF) if bl < 0.0 else EMPTY
    return _pair(left, right)


def div(a: Interval, b: Interval) -> Interval:
    """Least interval holding every ``z`` with ``x = y * z`` for some x in a, y in b.

    This is the hull of :func:`ext_div`, except that when both operands
    contain zero every ``z`` qualifies (``0 = 0 * z``).
    """
    if a.lo <= 0.0 <= a.hi and b.lo <= 0.0 <= b.hi:
        return WHOLE
    return ext_div(a, b).hull()


def pow_k(a: Interval, k: int) -> Interval:
    if a.is_empty:
        return EMPTY
    if k < 0:
        raise ValueError("negative exponent")
    if k == 0:
        return Interval(1.0, 1.0)
    lo, hi = a.lo, a.hi
    if lo >= 0.0:
        return Interval(pow_down(lo, k), pow_up(hi, k))
    if hi <= 0.0:
        if k % 2:
            return Interval(-pow_up(-lo, k) + 0.0, -pow_down(-hi, k) + 0.0)
        return Interval(pow_down(-hi, k), pow_up(-lo, k))
    if k % 2:
        return Interval(-pow_up(-lo, k) + 0.0, pow_up(hi, k))
    return Interval(0.0, max(pow_up(-lo, k), pow_up(hi, k)))


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return INF


def _exp_iv(a: Interval) -> Interval:
    lo, hi = a.lo, a.hi
    if lo == 0.0:
        l = 1.0
    elif lo == -INF:
        l = 0.0
    else:
        l = max(pred(_exp(lo)), 1.0 if lo > 0.0 else 0.0)
    if hi == 0.0:
        h = 1.0
    elif hi == INF:
        h = INF
    else:
        h = succ(_exp(hi))
        if hi < 0.0:
            h = min(h, 1.0)
    return Interval(l, h)


def _log_iv(a: Interval) -> Interval:
    lo, hi = max(a.lo, 0.0), a.hi
    if hi < 0.0:
        return EMPTY
    def one(x: float, down: bool) -> float:
        if x == 0.0:
            return -INF
        if x == INF:
            return INF
        if x == 1.0:
            return 0.0
        v = math.log(x)
        return pred(v) if down else succ(v)
    return Interval(one(lo, True) + 0.0, one(hi, False) + 0.0)


def _sqrt_iv(a: Interval) -> Interval:
    if a.hi < 0.0:
        return EMPTY
    return Interval(root_down(max(a.lo, 0.0), 2), root_up(a.hi, 2))


TWO_PI = 2.0 * math.pi


def _trig_range(a: Interval, fn, max_offset: float, min_offset: float) -> Interval:
    """Range of sin/cos; offsets locate the maxima/minima within a period."""
    lo, hi = a.lo, a.hi
    if math.isinf(lo) or math.isinf(hi) or hi - lo >= TWO_PI:
        return Interval(-1.0, 1.0)
    vl, vh = fn(lo), fn(hi)
    rlo = max(-1.0, pred(min(vl, vh)))
    rhi = min(1.0, succ(max(vl, vh)))
    margin = 1e-12 * (1.0 + max(abs(lo), abs(hi)))

    def hits(offset: float) -> bool:
        n = math.ceil((lo - margin - offset) / TWO_PI)
        return offset + n * TWO_PI <= hi + margin

    if hits(max_offset):
        rhi = 1.0
    if hits(min_offset):
        rlo = -1.0
    return Interval(rlo, rhi)


def _sin_iv(a: Interval) -> Interval:
    return _trig_range(a, math.sin, math.pi / 2, -math.pi / 2)


def _cos_iv(a: Interval) -> Interval:
    return _trig_range(a, math.cos, 0.0, math.pi)


_UNARY = {
    "exp": _exp_iv,
    "log": _log_iv,
    "sqrt": _sqrt_iv,
    "sin": _sin_iv,
    "cos": _cos_iv,
    "neg": neg,
}

UNARY_FUNCTIONS = frozenset(_UNARY) | {"pow"}


def unary_fn(name: str, a: Interval, k: int = 0) -> Interval:
    """Image of ``a`` (restricted to the function's domain) under ``name``.

    ``name`` is one of exp, log, sqrt, sin, cos, neg, or pow (with ``k``).
    """
    if a.is_empty:
        return EMPTY
    if name == "pow":
        return pow_k(a, k)
    try:
        fn = _UNARY[name]
    except KeyError:
        raise ValueError(f"unknown function {name!r}") from None
    return fn(a)


# ---------------------------------------------------------------------------
# set operations


def intersect(a: Interval, b: Interval) -> Interval:
    lo = a.lo if a.lo > b.lo else b.lo
    hi = a.hi if a.hi < b.hi else b.hi
    if lo > hi:
        return EMPTY
    return Interval(lo, hi)


def hull(a: Interval, b: Interval) -> Interval:
    if a.is_empty:
        return b
    if b.is_empty:
        return a
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi))


def hull_all(items: Iterable[Interval]) -> Interval:
    out = EMPTY
    for it in items:
        out = hull(out, it)
    return out


def width(a: Interval) -> float:
    if a.is_empty:
        return 0.0
    return add_up(a.hi, -a.lo)


def midpoint(a: Interval) -> float:
    """A float inside ``a``; finite whenever possible."""
    if a.is_empty:
        raise ValueError("midpoint of empty interval")
    lo, hi = a.lo, a.hi
    if lo == -INF and hi == INF:
        return 0.0
    if lo == -INF:
        return -MAX if hi > -MAX else hi
    if hi == INF:
        return MAX if lo < MAX else lo
    m = lo / 2 + hi / 2
    return min(max(m, lo), hi) + 0.0


def split(a: Interval) -> tuple[Interval, Interval]:
    """Bisect at the midpoint; canonical intervals cannot be split."""
    if a.is_empty:
        raise ValueError("cannot split the empty interval")
    if a.is_canonical:
        raise ValueError(f"cannot refine canonical interval {a}")
    m = midpoint(a)
    if m == a.lo or m == a.hi:  # only possible for the unbounded extremes
        m = float_mid(a.lo, a.hi)
    return Interval(a.lo, m), Interval(m, a.hi)


# ---------------------------------------------------------------------------
# float ordinals (for bisection over the float line)


def _ordinal(x: float) -> int:
    bits = struct.unpack("<q", struct.pack("<d", x + 0.0))[0]
    return bits if bits >= 0 else -(bits & 0x7FFFFFFFFFFFFFFF)


def _from_ordinal(n: int) -> float:
    if n < 0:
        n = (-n) | -0x8000000000000000
    return struct.unpack("<d", struct.pack("<q", n))[0] + 0.0


def float_mid(a: float, b: float) -> float:
    """Float halfway between ``a`` and ``b`` in float-ordinal order."""
    return _from_ordinal((_ordinal(a) + _ordinal(b)) // 2)


def floats_between(a: float, b: float) -> int:
    """Number of float steps from ``a`` to ``b``."""
    return _ordinal(b) - _ordinal(a)
