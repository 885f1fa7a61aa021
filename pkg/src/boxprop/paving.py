"""Branch-and-prune paving of the solution set of an inequality system."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from . import interval as ia
from .consistency import BcConfig, RelationalContext, functional_bc, relational_bc
from .expression import SystemSpec, eval_natural
from .interval import Interval
from .propagation import PropagationStats

__all__ = [
    "Paving",
    "PavingBudgetExceeded",
    "classify",
    "pave",
    "INNER",
    "BOUNDARY",
]

INNER, BOUNDARY = "inner", "boundary"
Box = dict[str, Interval]


@dataclass
class Paving:
    variables: list[str]
    epsilon: float
    inner: list[Box] = field(default_factory=list)
    boundary: list[Box] = field(default_factory=list)
    failed: int = 0
    processed: int = 0

    @property
    def is_empty(self) -> bool:
        return not self.inner and not self.boundary

    def boxes(self):
        """``(status, box)`` pairs in emission order: inner first."""
        for b in self.inner:
            yield INNER, b
        for b in self.boundary:
            yield BOUNDARY, b

    def volume(self, which: str = INNER) -> float:
        boxes = self.inner if which == INNER else self.boundary
        return math.fsum(math.prod(ia.width(d) for d in b.values()) for b in boxes)


class PavingBudgetExceeded(RuntimeError):
    def __init__(self, paving: Paving, budget: int):
        super().__init__(f"paving stopped after {budget} boxes")
        self.paving = paving
        self.budget = budget


def classify(s: SystemSpec, box: Mapping[str, Interval]) -> str:
    """``inner`` when every inequality provably holds on the whole box."""
    for g in s.inequalities:
        if not eval_natural(g, box).hi <= 0.0:
            return BOUNDARY
    return INNER


def _widest(box: Box, names: list[str]) -> str:
    best, best_w = names[0], -1.0
    for n in names:
        w = ia.width(box[n])
        if w > best_w:
            best, best_w = n, w
    return best


def pave(
    s: SystemSpec,
    box: Optional[Mapping[str, Interval]] = None,
    epsilon: float = 0.05,
    cfg: Optional[BcConfig] = None,
    *,
    max_boxes: int = 1_000_000,
    stats: Optional[PropagationStats] = None,
    on_box: Optional[Callable[[str, Box], None]] = None,
    rewrite: bool = True,
) -> Paving:
    """Cover the solutions in ``box`` with inner and boundary boxes.

    Each box taken from the (depth-first) worklist is contracted by box
    consistency, discarded on failure, kept as inner when every
    inequality holds throughout, kept as boundary once no wider than
    ``epsilon``, and otherwise split at the midpoint of its widest
    variable.  Without ``cfg``, relational consistency bisects only down
    to ``epsilon / 16``.  ``on_box(status, box)`` is called as boxes
    are emitted.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    cfg = cfg or BcConfig(mode="relational", precision=epsilon / 16)
    start: Box = dict(s.variables if box is None else box)
    for n, d in start.items():
        if not d.is_bounded:
            raise ValueError(f"domain of {n} must be bounded before paving, got {d}")
    names = list(start)
    ctx = RelationalContext(s, rewrite) if cfg.mode == "relational" else None
    paving = Paving(names, epsilon)
    stack = [start]
    while stack:
        if paving.processed >= max_boxes:
            raise PavingBudgetExceeded(paving, max_boxes)
        b = stack.pop()
        paving.processed += 1
        if ctx is not None:
            pruned = relational_bc(s, b, cfg, context=ctx, stats=stats)
        else:
            pruned = functional_bc(s, b, cfg)
        if pruned is None:
            paving.failed += 1
            continue
        if classify(s, pruned) == INNER:
            paving.inner.append(pruned)
            if on_box:
                on_box(INNER, pruned)
            continue
        var = _widest(pruned, names)
        dom = pruned[var]
        if ia.width(dom) <= epsilon or dom.is_canonical:
            paving.boundary.append(pruned)
            if on_box:
                on_box(BOUNDARY, pruned)
            continue
        left, right = ia.split(dom)
        lo_box, hi_box = dict(pruned), dict(pruned)
        lo_box[var], hi_box[var] = left, right
        stack.append(hi_box)
        stack.append(lo_box)
    return paving
