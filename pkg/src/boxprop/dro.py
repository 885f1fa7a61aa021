"""Domain reduction operators for the primitive constraints.

Each operator replaces every domain by the hull of the constraint's
projection onto that variable (intersected with the current box), and
repeats the projections until they stop changing, so the operators are
contracting, monotone and idempotent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import MutableSequence, Optional

from . import interval as ia
from .compile import AllEq, Bound, Constraint, Prod, Sum, UnaryLink
from .interval import EMPTY, INF, Interval, intersect

__all__ = ["ReductionOutcome", "reduce", "is_fixpoint", "narrow", "MAX_BRANCHES"]

MAX_BRANCHES = 4
# a single primitive converges in a handful of passes; this only guards
# against pathological ulp-by-ulp creep
_MAX_PASSES = 10_000


@dataclass(frozen=True)
class ReductionOutcome:
    domains: dict[int, Interval]
    changed: frozenset[int]
    failed: bool


def _meet_hull(pieces, dom: Interval) -> Interval:
    lo, hi = INF, -INF
    for p in pieces:
        m = intersect(p, dom)
        if m.lo <= m.hi:
            lo = m.lo if m.lo < lo else lo
            hi = m.hi if m.hi > hi else hi
    return Interval(lo, hi) if lo <= hi else EMPTY


# ---------------------------------------------------------------------------
# kernels: each takes the current domains and returns the narrowed ones,
# or None if some domain became empty


def _sum(X: Interval, Y: Interval, Z: Interval):
    for _ in range(_MAX_PASSES):
        Z2 = intersect(Z, ia.add(X, Y))
        if Z2.lo > Z2.hi:
            return None
        X2 = intersect(X, ia.sub(Z2, Y))
        if X2.lo > X2.hi:
            return None
        Y2 = intersect(Y, ia.sub(Z2, X2))
        if Y2.lo > Y2.hi:
            return None
        if X2 == X and Y2 == Y and Z2 == Z:
            break
        X, Y, Z = X2, Y2, Z2
    return X, Y, Z


def _quotient_project(Z: Interval, D: Interval, dom: Interval) -> Interval:
    """Values of ``dom`` that times something in ``D`` land in ``Z``."""
    if D.lo <= 0.0 <= D.hi and Z.lo <= 0.0 <= Z.hi:
        return dom  # t * 0 = 0 is in Z for every t
    return _meet_hull(ia.ext_div(Z, D).pieces(), dom)


def _prod(X: Interval, Y: Interval, Z: Interval):
    for _ in range(_MAX_PASSES):
        Z2 = intersect(Z, ia.mul(X, Y))
        if Z2.lo > Z2.hi:
            return None
        X2 = _quotient_project(Z2, Y, X)
        if X2.lo > X2.hi:
            return None
        Y2 = _quotient_project(Z2, X2, Y)
        if Y2.lo > Y2.hi:
            return None
        if X2 == X and Y2 == Y and Z2 == Z:
            break
        X, Y, Z = X2, Y2, Z2
    return X, Y, Z


def _periodic_preimage(X: Interval, bases: list[Interval]) -> Interval:
    """Hull of ``X`` meeting ``base + 2*pi*n`` over all n; no reduction past MAX_BRANCHES."""
    if math.isinf(X.lo) or math.isinf(X.hi):
        return X
    period = ia.TWO_PI
    hits = []
    n_lo = math.floor((X.lo - 2 * period) / period) - 1
    n_hi = math.ceil((X.hi + 2 * period) / period) + 1
    if n_hi - n_lo > 4 * MAX_BRANCHES + 8:
        return X
    for n in range(n_lo, n_hi + 1):
        shift = n * period
        for b in bases:
            if b.is_empty:
                continue
            lo, hi = b.lo + shift, b.hi + shift
            # each end widened on its own so the result is monotone in the bases
            piece = Interval(lo - 1e-12 * (1.0 + abs(lo)), hi + 1e-12 * (1.0 + abs(hi)))
            m = intersect(piece, X)
            if not m.is_empty:
                hits.append(m)
    if len(hits) > MAX_BRANCHES:
        return X
    return ia.hull_all(hits)


def _asin(y: float) -> float:
    return math.asin(max(-1.0, min(1.0, y)))


def _acos(y: float) -> float:
    return math.acos(max(-1.0, min(1.0, y)))


def _preimage(fn: str, k: int, Y: Interval, X: Interval) -> Interval:
    """Values of ``X`` whose image under ``fn`` meets ``Y``."""
    if fn == "neg":
        return intersect(X, ia.neg(Y))
    if fn == "exp":
        Yp = intersect(Y, Interval(0.0, INF))
        if Yp.is_empty or Yp.hi == 0.0:
            return EMPTY
        return intersect(X, ia.unary_fn("log", Yp))
    if fn == "log":
        return intersect(X, ia.unary_fn("exp", Y))
    if fn == "sqrt":
        Yp = intersect(Y, Interval(0.0, INF))
        return intersect(X, ia.pow_k(Yp, 2))
    if fn == "pow":
        if k == 0:
            return X if Y.contains(1.0) else EMPTY
        if k == 1:
            return intersect(X, Y)
        if k % 2:
            lo = -ia.root_up(-Y.lo, k) if Y.lo < 0 else ia.root_down(Y.lo, k)
            hi = -ia.root_down(-Y.hi, k) if Y.hi < 0 else ia.root_up(Y.hi, k)
            return intersect(X, Interval(lo + 0.0, hi + 0.0))
        Yp = intersect(Y, Interval(0.0, INF))
        if Yp.is_empty:
            return EMPTY
        r = Interval(ia.root_down(Yp.lo, k), ia.root_up(Yp.hi, k))
        return _meet_hull([ia.neg(r), r], X)
    if fn in ("sin", "cos"):
        Yc = intersect(Y, Interval(-1.0, 1.0))
        if Yc.is_empty:
            return EMPTY
        if Yc.lo == -1.0 and Yc.hi == 1.0:
            return X
        if fn == "sin":
            a_lo = ia.pred(_asin(Yc.lo))
            a_hi = ia.succ(_asin(Yc.hi))
            bases = [Interval(a_lo, a_hi), Interval(math.pi - a_hi, math.pi - a_lo)]
        else:
            a_lo = ia.pred(_acos(Yc.hi))
            a_hi = ia.succ(_acos(Yc.lo))
            bases = [Interval(a_lo, a_hi), Interval(-a_hi, -a_lo)]
        return _periodic_preimage(X, bases)
    raise ValueError(f"unknown function {fn!r}")


def _unary(fn: str, k: int, X: Interval, Y: Interval):
    for _ in range(_MAX_PASSES):
        Y2 = intersect(Y, ia.unary_fn(fn, X, k))
        if Y2.lo > Y2.hi:
            return None
        X2 = _preimage(fn, k, Y2, X)
        if X2.lo > X2.hi:
            return None
        if X2 == X and Y2 == Y:
            break
        X, Y = X2, Y2
    return X, Y


# ---------------------------------------------------------------------------


def narrow(c: Constraint, box: MutableSequence[Interval]) -> Optional[list[int]]:
    """Apply the operator of ``c`` to ``box`` in place.

    Returns the variables whose domain shrank, or None on failure (the
    offending domain is set to EMPTY).
    """
    if isinstance(c, Sum) or isinstance(c, Prod):
        X, Y, Z = box[c.x], box[c.y], box[c.z]
        out = _sum(X, Y, Z) if isinstance(c, Sum) else _prod(X, Y, Z)
        if out is None:
            box[c.z] = EMPTY
            return None
        changed = []
        for v, old, new in ((c.x, X, out[0]), (c.y, Y, out[1]), (c.z, Z, out[2])):
            if new != old:
                box[v] = new
                changed.append(v)
        return changed
    if isinstance(c, UnaryLink):
        X, Y = box[c.x], box[c.y]
        out = _unary(c.fn, c.k, X, Y)
        if out is None:
            box[c.y] = EMPTY
            return None
        changed = []
        if out[0] != X:
            box[c.x] = out[0]
            changed.append(c.x)
        if out[1] != Y:
            box[c.y] = out[1]
            changed.append(c.y)
        return changed
    if isinstance(c, Bound):
        V = box[c.v]
        new = intersect(V, c.region())
        if new.is_empty:
            box[c.v] = EMPTY
            return None
        if new != V:
            box[c.v] = new
            return [c.v]
        return []
    if isinstance(c, AllEq):
        common = box[c.members[0]]
        for m in c.members[1:]:
            common = intersect(common, box[m])
        if common.is_empty:
            for m in c.members:
                box[m] = EMPTY
            return None
        changed = []
        for m in c.members:
            if box[m] != common:
                box[m] = common
                changed.append(m)
        return changed
    raise TypeError(f"not a primitive constraint: {c!r}")


def reduce(c: Constraint, box) -> ReductionOutcome:
    """Apply the operator of ``c`` without touching ``box``.

    ``box`` is anything indexable by variable index (list or dict).
    """
    local = {v: box[v] for v in c.vars}
    changed = narrow(c, local)
    if changed is None:
        return ReductionOutcome(
            local, frozenset(v for v in c.vars if local[v] != box[v]), True
        )
    return ReductionOutcome(local, frozenset(changed), False)


def is_fixpoint(c: Constraint, box) -> bool:
    out = reduce(c, box)
    return not out.failed and not out.changed
