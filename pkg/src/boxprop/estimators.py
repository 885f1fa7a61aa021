"""scikit-learn style wrappers around the contractor and the paver.

Boxes are arrays of shape ``(n_boxes, n_variables, 2)`` holding
``[lower, upper]`` per variable, in the order the system declares its
variables.  Infinite bounds are allowed; NaN is not.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .consistency import BcConfig, RelationalContext, functional_bc, relational_bc
from .dsl import parse_system
from .expression import SystemSpec
from .interval import Interval
from .paving import pave

__all__ = ["BoxContractor", "BoxPaver", "check_boxes", "check_points"]


def _as_system(system) -> SystemSpec:
    if isinstance(system, SystemSpec):
        return system
    if isinstance(system, str):
        return parse_system(system)
    raise TypeError(f"system must be a SystemSpec or system text, got {type(system).__name__}")


def check_boxes(X, n_variables: int) -> np.ndarray:
    """Validate a box array; a single ``(n_variables, 2)`` box is promoted."""
    X = check_array(X, dtype=np.float64, ensure_all_finite=False, ensure_2d=False, allow_nd=True)
    if X.ndim == 2 and X.shape == (n_variables, 2):
        X = X[np.newaxis]
    if X.ndim != 3 or X.shape[1:] != (n_variables, 2):
        raise ValueError(f"expected boxes of shape (n, {n_variables}, 2), got {X.shape}")
    if np.isnan(X).any():
        raise ValueError("boxes must not contain NaN")
    if (X[..., 0] > X[..., 1]).any():
        raise ValueError("every lower bound must be <= its upper bound")
    return X


def check_points(X, n_variables: int) -> np.ndarray:
    X = check_array(X, dtype=np.float64)
    if X.shape[1] != n_variables:
        raise ValueError(f"expected {n_variables} columns, got {X.shape[1]}")
    return X


def _to_box(row: np.ndarray, names: list[str]) -> dict[str, Interval]:
    return {n: Interval(float(lo) + 0.0, float(hi) + 0.0) for n, (lo, hi) in zip(names, row)}


def _to_array(boxes, names: list[str]) -> np.ndarray:
    out = np.empty((len(boxes), len(names), 2))
    for i, b in enumerate(boxes):
        for k, n in enumerate(names):
            out[i, k] = b[n]
    return out


class BoxContractor(TransformerMixin, BaseEstimator):
    """Narrow boxes to box consistency with respect to an inequality system.

    ``transform`` returns the contracted boxes; rows proven infeasible are
    filled with NaN.
    """

    def __init__(self, system=None, mode="relational", precision=None, max_rounds=100):
        self.system = system
        self.mode = mode
        self.precision = precision
        self.max_rounds = max_rounds

    def fit(self, X=None, y=None):
        self.system_ = _as_system(self.system)
        self.config_ = BcConfig(self.mode, self.precision, self.max_rounds)
        self.variables_ = list(self.system_.variables)
        self.n_variables_ = len(self.variables_)
        self.context_ = RelationalContext(self.system_) if self.mode == "relational" else None
        if X is not None:
            check_boxes(X, self.n_variables_)
        return self

    def _contract(self, box):
        if self.context_ is not None:
            return relational_bc(self.system_, box, self.config_, context=self.context_)
        return functional_bc(self.system_, box, self.config_)

    def transform(self, X):
        check_is_fitted(self, "system_")
        X = check_boxes(X, self.n_variables_)
        out = np.full_like(X, np.nan)
        for i, row in enumerate(X):
            res = self._contract(_to_box(row, self.variables_))
            if res is not None:
                out[i] = _to_array([res], self.variables_)[0]
        return out

    def initial_box(self) -> np.ndarray:
        """The declared domains as a ``(1, n_variables, 2)`` array."""
        check_is_fitted(self, "system_")
        return _to_array([self.system_.variables], self.variables_)


class BoxPaver(BaseEstimator):
    """Cover the solution set with inner and boundary boxes.

    After ``fit``, ``predict`` labels points 1 (in an inner box, so a
    proven solution), 0 (only in boundary boxes, undecided) or -1
    (outside the paving, so proven not a solution).
    """

    INNER, BOUNDARY, OUTSIDE = 1, 0, -1

    def __init__(self, system=None, epsilon=0.05, mode="relational", precision=None, max_boxes=1_000_000):
        self.system = system
        self.epsilon = epsilon
        self.mode = mode
        self.precision = precision
        self.max_boxes = max_boxes

    def fit(self, X=None, y=None):
        """Pave the declared domains, or the single box ``X`` if given."""
        self.system_ = _as_system(self.system)
        self.variables_ = list(self.system_.variables)
        self.n_variables_ = len(self.variables_)
        box = None
        if X is not None:
            X = check_boxes(X, self.n_variables_)
            if len(X) != 1:
                raise ValueError("fit takes exactly one starting box")
            box = _to_box(X[0], self.variables_)
        precision = self.epsilon / 16 if self.precision is None else self.precision
        cfg = BcConfig(self.mode, precision)
        self.paving_ = pave(self.system_, box, self.epsilon, cfg, max_boxes=self.max_boxes)
        self.inner_boxes_ = _to_array(self.paving_.inner, self.variables_)
        self.boundary_boxes_ = _to_array(self.paving_.boundary, self.variables_)
        return self

    def predict(self, X):
        check_is_fitted(self, "paving_")
        P = check_points(X, self.n_variables_)
        labels = np.full(len(P), self.OUTSIDE, dtype=int)
        for boxes, label in ((self.boundary_boxes_, self.BOUNDARY), (self.inner_boxes_, self.INNER)):
            if len(boxes) == 0:
                continue
            inside = (P[:, None, :] >= boxes[None, :, :, 0]) & (P[:, None, :] <= boxes[None, :, :, 1])
            labels[inside.all(axis=2).any(axis=1)] = label
        return labels

    def area(self, which: str = "inner") -> float:
        check_is_fitted(self, "paving_")
        return self.paving_.volume(which)
