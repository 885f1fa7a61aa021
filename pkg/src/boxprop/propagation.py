"""Generic propagation and propagation with selective initialization.

``gpa`` follows the classic active-set loop literally: pop a constraint,
apply its operator, stop on an empty domain, add every constraint that
watches a changed variable, and only then drop the popped constraint, so
an operator never re-enters the set because of its own changes.
"""

from __future__ import annotations

import heapq
import itertools
import math
import os
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .compile import Csp, peripheral_set
from .dro import narrow
from .interval import Interval

__all__ = [
    "ActiveSet",
    "PropagationStats",
    "PropagationBudgetExceeded",
    "gpa",
    "psi_evaluate",
    "psi_reactivate",
    "count_single_pass",
    "DEFAULT_MAX_ACTIVATIONS",
]

DISCIPLINES = ("fifo", "deepest", "shallowest", "random")


def _default_budget() -> int:
    try:
        return int(os.environ.get("BOXPROP_MAX_ACTIVATIONS", "2000000"))
    except ValueError:
        return 2_000_000


DEFAULT_MAX_ACTIVATIONS = _default_budget()


class PropagationBudgetExceeded(RuntimeError):
    pass


class ActiveSet:
    """Constraint pool without duplicates; ``pop`` follows the discipline.

    ``deepest`` pops the constraint farthest from its expression root
    first, ``shallowest`` the nearest; ties go to insertion order.
    """

    def __init__(self, depth: Sequence[float], discipline: str = "fifo", rng=None):
        if discipline not in DISCIPLINES:
            raise ValueError(f"unknown discipline {discipline!r}")
        self.discipline = discipline
        self.depth = depth
        self.members: set[int] = set()
        self._seq = itertools.count()
        if discipline == "fifo":
            self._queue: deque = deque()
        elif discipline == "random":
            self._items: list[int] = []
            self._rng = rng or random.Random(0)
        else:
            self._heap: list = []

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, c: int) -> bool:
        return c in self.members

    def push(self, c: int) -> None:
        if c in self.members:
            return
        self.members.add(c)
        d = self.depth[c]
        if self.discipline == "fifo":
            self._queue.append(c)
        elif self.discipline == "random":
            self._items.append(c)
        elif self.discipline == "deepest":
            heapq.heappush(self._heap, (-d, next(self._seq), c))
        else:
            heapq.heappush(self._heap, (d, next(self._seq), c))

    def pop(self) -> int:
        if self.discipline == "fifo":
            c = self._queue.popleft()
        elif self.discipline == "random":
            i = self._rng.randrange(len(self._items))
            self._items[i], self._items[-1] = self._items[-1], self._items[i]
            c = self._items.pop()
        else:
            c = heapq.heappop(self._heap)[2]
        self.members.discard(c)
        return c


@dataclass
class PropagationStats:
    activations: Counter = field(default_factory=Counter)
    total_activations: int = 0
    effective_activations: int = 0
    outcome: str = "fixpoint"
    runs: int = 1
    failures: int = 0

    @property
    def max_per_constraint(self) -> int:
        return max(self.activations.values(), default=0)

    def merge(self, other: "PropagationStats") -> None:
        """Accumulate another run into this record."""
        self.activations.update(other.activations)
        self.total_activations += other.total_activations
        self.effective_activations += other.effective_activations
        self.runs += other.runs
        self.failures += other.failures
        if other.outcome == "failure":
            self.outcome = "failure"

    def to_record(self) -> dict:
        return {
            "runs": self.runs,
            "total_activations": self.total_activations,
            "effective_activations": self.effective_activations,
            "failures": self.failures,
            "outcome": self.outcome,
        }

    def to_text(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in self.to_record().items())

    @classmethod
    def empty(cls) -> "PropagationStats":
        return cls(runs=0)


def gpa(
    c: Csp,
    box: Sequence[Interval],
    init: Optional[Iterable[int]] = None,
    discipline: str = "fifo",
    *,
    rng=None,
    max_activations: Optional[int] = None,
    seed_outputs: bool = False,
    ratio: float = 0.0,
) -> tuple[Optional[list[Interval]], PropagationStats]:
    """Propagate from ``init`` (default: all constraints) until fixpoint.

    Returns ``(box, stats)``; ``box`` is None when a domain became empty.
    The input box is not modified.

    With ``seed_outputs``, the node variable defined by a constraint is
    treated as changed on that constraint's first activation even if its
    domain stayed the whole line (needed for evaluation runs where an
    intermediate value is unbounded in both directions).

    With ``ratio > 0`` a narrowing wakes the watchers of a variable only
    when it removes more than that fraction of the variable's finite
    width.  The result is then a sound box around the fixpoint rather
    than the fixpoint itself, and slow convergence (domains creeping by
    a few ulps per round) is cut short.
    """
    budget = DEFAULT_MAX_ACTIVATIONS if max_activations is None else max_activations
    work = list(box)
    stats = PropagationStats()
    active = ActiveSet(c.depth, discipline, rng)
    for ci in range(len(c.constraints)) if init is None else init:
        active.push(ci)
    constraints = c.constraints
    watchers = c.watchers
    defines = _node_outputs(c) if seed_outputs else None
    while active:
        ci = active.pop()
        stats.total_activations += 1
        stats.activations[ci] += 1
        if stats.total_activations > budget:
            raise PropagationBudgetExceeded(
                f"propagation exceeded {budget} activations"
            )
        con = constraints[ci]
        if ratio > 0.0:
            before = {v: work[v] for v in con.vars}
        changed = narrow(con, work)
        if changed is None:
            stats.effective_activations += 1
            stats.outcome = "failure"
            stats.failures = 1
            return None, stats
        if changed:
            stats.effective_activations += 1
            if ratio > 0.0:
                changed = [v for v in changed if _significant(before[v], work[v], ratio)]
        if defines is not None and defines[ci] is not None and stats.activations[ci] == 1:
            if defines[ci] not in changed:
                changed = changed + [defines[ci]]
        if changed:
            for v in changed:
                for other in watchers[v]:
                    if other != ci:
                        active.push(other)
    return work, stats


def _significant(old: Interval, new: Interval, ratio: float) -> bool:
    w = old.hi - old.lo
    if math.isinf(w):
        return True
    return w - (new.hi - new.lo) > ratio * w


def _node_outputs(c: Csp) -> list[Optional[int]]:
    """For each constraint, the internal node variable it defines (if any).

    A node variable's defining constraint is its deepest watcher; the
    other watcher (if any) is the parent's constraint one level up.
    """
    out: list[Optional[int]] = [None] * len(c.constraints)
    for v, ws in enumerate(c.watchers):
        if c.is_internal[v] and ws:
            out[max(ws, key=lambda ci: c.depth[ci])] = v
    return out


def psi_evaluate(c: Csp, box: Optional[Sequence[Interval]] = None, **kw):
    """Evaluate by propagation, seeding only the peripheral constraints.

    The seed is ordered deepest-first, so each constraint runs after all
    of its subtree; on single-occurrence expressions every operator
    fires at most once and each root ends with its natural interval value.
    """
    start = c.initial_box() if box is None else list(box)
    return gpa(c, start, peripheral_set(c), "deepest", seed_outputs=True, **kw)


def psi_reactivate(
    c: Csp,
    box: Sequence[Interval],
    v: int,
    shrunk: Interval,
    discipline: str = "shallowest",
    **kw,
):
    """Restart from a fixpoint after shrinking ``v``, seeding only its constraint.

    ``v`` must occur in exactly one constraint (an expression root when
    no bound is compiled in) and ``shrunk`` must be a proper subset of its
    current domain.
    """
    owners = c.watchers[v]
    if len(owners) != 1:
        raise ValueError(
            f"variable {c.name(v)} occurs in {len(owners)} constraints, expected exactly one"
        )
    current = box[v]
    if shrunk == current or not current.contains(shrunk):
        raise ValueError(f"{shrunk} is not a proper subset of {current}")
    start = list(box)
    start[v] = shrunk
    if shrunk.is_empty:
        stats = PropagationStats(outcome="failure", failures=1)
        return None, stats
    return gpa(c, start, owners, discipline, **kw)


def count_single_pass(c: Csp, box: Sequence[Interval], v: int, shrunk: Interval) -> bool:
    """True when a shallowest-first reactivation runs every operator at most once."""
    _, stats = psi_reactivate(c, box, v, shrunk, "shallowest")
    return stats.max_per_constraint <= 1
