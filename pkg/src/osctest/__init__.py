"""Oscillation tests for first-order equations with non-monotone delays or advances."""

from .criteria import (
    INCONCLUSIVE,
    OSCILLATORY,
    PRECONDITION_FAILED,
    Context,
    CriterionReport,
    OverallVerdict,
    aggregate,
    evaluate_all,
    prepare,
)
from .envelopes import combine_max, combine_min, running_inf, running_sup
from .kernels import autonomous_iterates, autonomous_lambda, build_kernel_advanced, build_kernel_delay, eval_a, eval_b
from .piecewise import Cell, PiecewiseCellFunction
from .problem import AdvancedProblem, DelayProblem, Term, load_problem, parse_problem, validate
from .quadrature import Grid, build_grid, cumulative
from .simulator import count_sign_changes, integrate_delay, residual_check

__version__ = "0.1.0"

__all__ = [
    "AdvancedProblem",
    "Cell",
    "Context",
    "CriterionReport",
    "DelayProblem",
    "Grid",
    "INCONCLUSIVE",
    "OSCILLATORY",
    "OverallVerdict",
    "PRECONDITION_FAILED",
    "PiecewiseCellFunction",
    "Term",
    "aggregate",
    "autonomous_iterates",
    "autonomous_lambda",
    "build_grid",
    "build_kernel_advanced",
    "build_kernel_delay",
    "combine_max",
    "combine_min",
    "count_sign_changes",
    "cumulative",
    "eval_a",
    "eval_b",
    "evaluate_all",
    "integrate_delay",
    "load_problem",
    "parse_problem",
    "prepare",
    "residual_check",
    "running_inf",
    "running_sup",
    "validate",
]
