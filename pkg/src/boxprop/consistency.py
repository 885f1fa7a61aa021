"""Functional and relational box consistency.

Both modes shrink one bound of one variable at a time by bisecting for
the extreme float at which a trial slice of the domain is provably
infeasible.  The functional test is an interval evaluation of the
inequality; the relational test runs propagation on the compiled
constraints with the variable restricted to the slice.  The relational
test fails whenever the functional one does, so relational results are
always contained in functional ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional

from . import interval as ia
from .compile import Csp, compile_system
from .expression import Expr, SystemSpec, eval_natural, rewrite_single_occurrence, variables
from .interval import EMPTY, INF, MAX, Interval
from .propagation import PropagationStats, gpa

__all__ = [
    "BcConfig",
    "shrink_upper_functional",
    "shrink_lower_functional",
    "functional_bc",
    "relational_shrink",
    "relational_bc",
    "RelationalContext",
]

Box = dict[str, Interval]


@dataclass(frozen=True)
class BcConfig:
    """``precision=None`` bisects down to adjacent floats; a positive value
    stops once the search bracket is at most that wide.  ``ratio`` is the
    propagation threshold handed to :func:`gpa` in relational mode."""

    mode: str = "relational"
    precision: Optional[float] = None
    max_rounds: int = 100
    ratio: float = 1e-2

    def __post_init__(self):
        if self.mode not in ("functional", "relational"):
            raise ValueError(f"unknown box-consistency mode {self.mode!r}")
        if self.precision is not None and not self.precision >= 0:
            raise ValueError("precision must be non-negative")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if not 0.0 <= self.ratio < 1.0:
            raise ValueError("ratio must be in [0, 1)")


# ---------------------------------------------------------------------------
# bisection over the float line


def _done(l: float, h: float, tau: Optional[float]) -> bool:
    if ia.floats_between(l, h) <= 1:
        return True
    return bool(tau) and h - l <= tau


def least_cut(lo: float, hi: float, fails_from: Callable[[float], bool], tau=None):
    """Least float ``t`` in ``[lo, hi]`` with ``fails_from(t)``, or None.

    ``fails_from(t)`` must be monotone: once true it stays true for larger t.
    """
    top = hi if hi < INF else MAX
    if top < lo or not fails_from(top):
        return None
    if fails_from(lo):
        return lo
    l, h = lo, top
    while not _done(l, h, tau):
        m = ia.float_mid(l, h)
        if fails_from(m):
            h = m
        else:
            l = m
    return h


def greatest_cut(lo: float, hi: float, fails_to: Callable[[float], bool], tau=None):
    """Greatest float ``t`` in ``[lo, hi]`` with ``fails_to(t)``, or None."""
    bottom = lo if lo > -INF else -MAX
    if bottom > hi or not fails_to(bottom):
        return None
    if fails_to(hi):
        return hi
    l, h = bottom, hi
    while not _done(l, h, tau):
        m = ia.float_mid(l, h)
        if fails_to(m):
            l = m
        else:
            h = m
    return l


# ---------------------------------------------------------------------------
# functional


def _positive(g: Expr, box: Mapping[str, Interval], var: str, trial: Interval) -> bool:
    env = dict(box)
    env[var] = trial
    return eval_natural(g, env).lo > 0.0


def shrink_upper_functional(g: Expr, var: str, box: Mapping[str, Interval], precision=None) -> Interval:
    """``[lb, a]`` for the least float ``a`` with ``g([a, rb]) > 0`` everywhere."""
    X = box[var]
    if X.is_empty:
        return EMPTY
    t = least_cut(X.lo, X.hi, lambda t: _positive(g, box, var, Interval(t, X.hi)), precision)
    if t is None:
        return X
    if t == X.lo:
        return EMPTY
    return Interval(X.lo, t)


def shrink_lower_functional(g: Expr, var: str, box: Mapping[str, Interval], precision=None) -> Interval:
    """Mirror image of :func:`shrink_upper_functional` for the lower bound."""
    X = box[var]
    if X.is_empty:
        return EMPTY
    t = greatest_cut(X.lo, X.hi, lambda t: _positive(g, box, var, Interval(X.lo, t)), precision)
    if t is None:
        return X
    if t == X.hi:
        return EMPTY
    return Interval(t, X.hi)


def _enforce_classes(s: SystemSpec, box: Box) -> bool:
    """Intersect each equivalence class; False if one becomes empty."""
    for cls in s.equivalence_classes:
        common = box[cls[0]]
        for m in cls[1:]:
            common = ia.intersect(common, box[m])
        if common.is_empty:
            return False
        for m in cls:
            box[m] = common
    return True


def _progress(old: Interval, new: Interval, tau: Optional[float]) -> bool:
    """Whether a narrowing is worth another sweep; moves below ``tau`` are not."""
    if tau is None:
        return new != old
    return new.lo - old.lo > tau or old.hi - new.hi > tau


def functional_bc(
    s: SystemSpec,
    box: Optional[Mapping[str, Interval]] = None,
    cfg: Optional[BcConfig] = None,
) -> Optional[Box]:
    """Sweep every (inequality, variable) pair until no bound moves
    (by more than the precision, when one is set).

    Returns the narrowed box, or None when some domain became empty.
    """
    cfg = cfg or BcConfig(mode="functional")
    cur: Box = dict(s.variables if box is None else box)
    if any(d.is_empty for d in cur.values()):
        return None
    if not _enforce_classes(s, cur):
        return None
    for _ in range(cfg.max_rounds):
        moved = False
        for g in s.inequalities:
            for var in variables(g):
                X = cur[var]
                new = shrink_lower_functional(g, var, cur, cfg.precision)
                if not new.is_empty:
                    cur[var] = new
                    new = shrink_upper_functional(g, var, cur, cfg.precision)
                if new.is_empty:
                    return None
                if new != X:
                    cur[var] = new
                    moved = moved or _progress(X, new, cfg.precision)
                    if not _enforce_classes(s, cur):
                        return None
        if not moved:
            break
    return cur


# ---------------------------------------------------------------------------
# relational


class RelationalContext:
    """A system compiled once for repeated relational consistency runs.

    Repeated variables are split into single-occurrence copies (unless
    ``rewrite`` is off); domains are reported per variable of the given
    system.
    """

    def __init__(self, s: SystemSpec, rewrite: bool = True):
        self.system = s
        if s.is_single_occurrence() or not rewrite:
            rs = s
            self.copies = {n: [n] for n in s.variables}
        else:
            rs = rewrite_single_occurrence(s)
            fresh = [m for m in rs.variables if m not in s.variables]
            self.copies = {}
            for n in s.variables:
                if n in rs.variables:
                    self.copies[n] = [n]
                else:
                    self.copies[n] = [m for m in fresh if rs.origin.get(m) == s.original_of(n)]
        self.rewritten = rs
        self.csp = compile_system(rs, allow_repeats=not rewrite)
        self.index = {n: [self.csp.index(m) for m in ms] for n, ms in self.copies.items()}
        # per inequality, the system variables that occur in it
        self.vars_of = []
        for g in rs.inequalities:
            names = variables(g)
            owners = [n for n, ms in self.copies.items() if any(m in names for m in ms)]
            self.vars_of.append(owners)

    def to_csp_box(self, box: Mapping[str, Interval]) -> list[Interval]:
        out = list(self.csp.domains)
        for n, idx in self.index.items():
            for i in idx:
                out[i] = box[n]
        return out

    def from_csp_box(self, cbox: list[Interval]) -> Box:
        out: Box = {}
        for n, idx in self.index.items():
            dom = cbox[idx[0]]
            for i in idx[1:]:
                dom = ia.intersect(dom, cbox[i])
            out[n] = dom
        return out


def _trial_fails(frag: Csp, cbox: list[Interval], idx: list[int], trial: Interval, stats, gkw) -> bool:
    b = list(cbox)
    for i in idx:
        b[i] = ia.intersect(b[i], trial)
        if b[i].is_empty:
            return True
    seed = dict.fromkeys(ci for i in idx for ci in frag.watchers[i])
    out, st = gpa(frag, b, seed, **gkw)
    if stats is not None:
        stats.merge(st)
    return out is None


def relational_shrink(
    c: Csp,
    j: int,
    var: str,
    box: list[Interval],
    a: float,
    side: str = "upper",
    *,
    stats: Optional[PropagationStats] = None,
    **gkw,
) -> bool:
    """True when inequality ``j`` plus ``var > a`` (``side="upper"``) or
    ``var < a`` (``side="lower"``) is proven infeasible by propagation.

    ``var`` names an external variable of ``c`` or an original variable
    whose copies are all restricted.
    """
    idx = c.copies_of(var) or [c.index(var)]
    X = box[idx[0]]
    if side == "upper":
        trial = Interval.make(ia.succ(a), X.hi)
    elif side == "lower":
        trial = Interval.make(X.lo, ia.pred(a))
    else:
        raise ValueError(f"side must be 'upper' or 'lower', not {side!r}")
    frag = c.fragment(j)
    b = list(box)
    for i in idx:
        b[i] = ia.intersect(b[i], trial)
        if b[i].is_empty:
            return True
    out, st = gpa(frag, b, **gkw)
    if stats is not None:
        stats.merge(st)
    return out is None


def relational_bc(
    s: SystemSpec,
    box: Optional[Mapping[str, Interval]] = None,
    cfg: Optional[BcConfig] = None,
    *,
    context: Optional[RelationalContext] = None,
    stats: Optional[PropagationStats] = None,
    **gkw,
) -> Optional[Box]:
    """Relational box consistency; None when the system is infeasible in ``box``.

    The compiled system is propagated to a fixpoint first and after every
    bound that moves; trial propagations start from that fixpoint and
    seed only the constraints on the restricted variable.
    """
    cfg = cfg or BcConfig()
    gkw.setdefault("ratio", cfg.ratio)
    ctx = context or RelationalContext(s)
    csp = ctx.csp
    start = dict(s.variables if box is None else box)
    if any(d.is_empty for d in start.values()):
        return None
    cbox, st = gpa(csp, ctx.to_csp_box(start), **gkw)
    if stats is not None:
        stats.merge(st)
    if cbox is None:
        return None
    tau = cfg.precision
    for _ in range(cfg.max_rounds):
        moved = False
        for j in range(len(ctx.rewritten.inequalities)):
            frag = csp.fragment(j)
            for n in ctx.vars_of[j]:
                idx = ctx.index[n]
                for side in ("lower", "upper"):
                    X = cbox[idx[0]]
                    if side == "upper":
                        t = least_cut(
                            X.lo, X.hi,
                            lambda t: _trial_fails(frag, cbox, idx, Interval(t, X.hi), stats, gkw),
                            tau,
                        )
                        if t is None:
                            continue
                        new = EMPTY if t == X.lo else Interval(X.lo, ia.pred(t))
                    else:
                        t = greatest_cut(
                            X.lo, X.hi,
                            lambda t: _trial_fails(frag, cbox, idx, Interval(X.lo, t), stats, gkw),
                            tau,
                        )
                        if t is None:
                            continue
                        new = EMPTY if t == X.hi else Interval(ia.succ(t), X.hi)
                    if new.is_empty:
                        return None
                    for i in idx:
                        cbox[i] = ia.intersect(cbox[i], new)
                    seed = dict.fromkeys(ci for i in idx for ci in csp.watchers[i])
                    cbox, st = gpa(csp, cbox, seed, **gkw)
                    if stats is not None:
                        stats.merge(st)
                    if cbox is None:
                        return None
                    moved = moved or _progress(X, new, tau)
        if not moved:
            break
    return ctx.from_csp_box(cbox)
