"""Interval constraint propagation for systems of nonlinear inequalities."""

from .compile import AllEq, Bound, Csp, Prod, Sum, UnaryLink, compile_expression, compile_system, peripheral_set
from .consistency import BcConfig, RelationalContext, functional_bc, relational_bc
from .dro import is_fixpoint, narrow, reduce
from .dsl import load_system, parse_system
from .expression import ParseError, SystemSpec, eval_natural, parse, render, rewrite_single_occurrence
from .interval import EMPTY, WHOLE, Interval, ext_div, least_canonical
from .paving import Paving, pave
from .propagation import PropagationStats, count_single_pass, gpa, psi_evaluate, psi_reactivate

__version__ = "0.1.0"


def __getattr__(name):
    # scikit-learn is imported only when an estimator is asked for
    if name in ("BoxContractor", "BoxPaver"):
        from . import estimators

        return getattr(estimators, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    "AllEq",
    "BcConfig",
    "Bound",
    "BoxContractor",
    "BoxPaver",
    "Csp",
    "EMPTY",
    "Interval",
    "ParseError",
    "Paving",
    "Prod",
    "PropagationStats",
    "RelationalContext",
    "Sum",
    "SystemSpec",
    "UnaryLink",
    "WHOLE",
    "compile_expression",
    "compile_system",
    "count_single_pass",
    "eval_natural",
    "ext_div",
    "functional_bc",
    "gpa",
    "is_fixpoint",
    "least_canonical",
    "load_system",
    "narrow",
    "parse",
    "parse_system",
    "pave",
    "peripheral_set",
    "psi_evaluate",
    "psi_reactivate",
    "reduce",
    "relational_bc",
    "render",
    "rewrite_single_occurrence",
]
