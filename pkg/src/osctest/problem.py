"""Delay and advanced equations with several deviating arguments.

    delay:     x'(t) + sum_i p_i(t) x(tau_i(t))   = 0
    advanced:  x'(t) - sum_i p_i(t) x(sigma_i(t)) = 0

Both are stored as a list of ``Term(coefficient, argument)`` pairs of
:class:`PiecewiseCellFunction`. The equation holds from ``start`` onwards,
the latest ``t0`` among its functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .piecewise import PiecewiseCellFunction

__all__ = [
    "Term",
    "DelayProblem",
    "AdvancedProblem",
    "HypothesisCheck",
    "ValidationReport",
    "ProblemFile",
    "validate_delay",
    "validate_advanced",
    "validate",
    "load_problem",
    "parse_problem",
    "ProblemFormatError",
]

_TOL = 1e-12


class ProblemFormatError(ValueError):
    """A problem file could not be parsed."""


@dataclass(frozen=True)
class Term:
    coefficient: PiecewiseCellFunction
    argument: PiecewiseCellFunction


@dataclass(frozen=True)
class _Problem:
    terms: tuple[Term, ...]
    kind = "abstract"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("a problem needs at least one term")

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def start(self) -> float:
        return max(max(t.coefficient.t0, t.argument.t0) for t in self.terms)

    @property
    def coefficients(self) -> list[PiecewiseCellFunction]:
        return [t.coefficient for t in self.terms]

    @property
    def arguments(self) -> list[PiecewiseCellFunction]:
        return [t.argument for t in self.terms]

    def functions(self) -> list[PiecewiseCellFunction]:
        return self.coefficients + self.arguments

    def total_coefficient(self, t, left: bool = False):
        """``sum_i p_i(t)`` (or its left limit)."""
        if left:
            return sum(p.left_limit(t) for p in self.coefficients)
        return sum(p(t) for p in self.coefficients)

    def breakpoints(self, a: float, b: float) -> np.ndarray:
        pts = [f.breakpoints(a, b) for f in self.functions()]
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)

    def to_dict(self) -> dict:
        return {
            "type": self.kind,
            "terms": [{"p": t.coefficient.to_dict(), "arg": t.argument.to_dict()} for t in self.terms],
        }


@dataclass(frozen=True)
class DelayProblem(_Problem):
    kind = "delay"


@dataclass(frozen=True)
class AdvancedProblem(_Problem):
    kind = "advanced"


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    witness: str | None = None


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[HypothesisCheck, ...]
    max_deviation: float
    bounded_deviation: bool

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[HypothesisCheck]:
        return [c for c in self.checks if not c.passed]

    @property
    def advance_bound(self) -> float:
        """Largest advance ``sup(sigma_i(t) - t)``; only meaningful for advanced problems."""
        return self.max_deviation

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [{"name": c.name, "passed": c.passed, "witness": c.witness} for c in self.checks],
            "max_deviation": self.max_deviation,
            "bounded_deviation": self.bounded_deviation,
        }


def _sample_points(f: PiecewiseCellFunction, a: float, b: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Grid nodes plus cell endpoints (values and left limits) of f on [a, b]."""
    n = max(int(math.ceil((b - a) / h)), 1)
    nodes = np.linspace(a, b, n + 1)
    te, ve = f.endpoint_samples(a, b)
    return np.concatenate([nodes, te]), np.concatenate([f(nodes), ve])


def _first(mask: np.ndarray, ts: np.ndarray) -> float:
    return float(np.min(ts[mask]))


def _check_coefficients(problem, a, b, h) -> list[HypothesisCheck]:
    out = []
    for i, p in enumerate(problem.coefficients, start=1):
        ts, vs = _sample_points(p, a, b, h)
        bad = vs < -_TOL
        witness = f"p_{i}({_first(bad, ts):.12g}) < 0" if bad.any() else None
        out.append(HypothesisCheck(f"p_{i} >= 0", not bad.any(), witness))
    return out


def _deviation_bound(problem, a, b, sign) -> tuple[float, bool]:
    """sup of sign*(arg(t) - t) over [a, b] and whether it stays bounded as t -> inf."""
    sup = 0.0
    bounded = True
    for arg in problem.arguments:
        ts, vs = arg.endpoint_samples(a, b)
        if ts.size:
            sup = max(sup, float(np.max(sign * (vs - ts))))
        cells = range(len(arg.cells)) if arg.periodic else [len(arg.cells) - 1]
        for c in cells:
            if sign * arg.growth_per_period(c, slope_offset=1.0) > _TOL:
                bounded = False
    return (sup if bounded else math.inf), bounded


def validate_delay(problem: DelayProblem, window: tuple[float, float], h: float) -> ValidationReport:
    """Check nonnegative coefficients, ``tau_i(t) <= t`` and ``tau_i(t) -> inf``.

    Sampling covers the grid nodes of step ``h`` plus every cell endpoint in
    ``[start, window[1]]``. The limit check is structural: an argument tends
    to infinity iff every cell drifts upwards from one period to the next.
    """
    a, b = problem.start, float(window[1])
    checks = _check_coefficients(problem, a, b, h)
    for i, tau in enumerate(problem.arguments, start=1):
        ts, vs = _sample_points(tau, a, b, h)
        bad = vs > ts + _TOL * np.maximum(1.0, np.abs(ts))
        witness = f"tau_{i}({_first(bad, ts):.12g}) > t" if bad.any() else None
        checks.append(HypothesisCheck(f"tau_{i}(t) <= t", not bad.any(), witness))
    for i, tau in enumerate(problem.arguments, start=1):
        cells = range(len(tau.cells)) if tau.periodic else [len(tau.cells) - 1]
        stuck = [c for c in cells if tau.growth_per_period(c) <= _TOL]
        witness = None
        if stuck:
            c = tau.cells[stuck[0]]
            witness = f"cell {stuck[0]} [{c.l:.12g}, {c.u:.12g}) does not drift upwards"
        checks.append(HypothesisCheck(f"lim tau_{i}(t) = inf", not stuck, witness))
    sup, bounded = _deviation_bound(problem, a, b, sign=-1.0)
    return ValidationReport(tuple(checks), sup, bounded)


def validate_advanced(problem: AdvancedProblem, window: tuple[float, float], h: float) -> ValidationReport:
    """Check nonnegative coefficients and ``sigma_i(t) >= t``; report the largest advance."""
    a, b = problem.start, float(window[1])
    checks = _check_coefficients(problem, a, b, h)
    for i, sigma in enumerate(problem.arguments, start=1):
        ts, vs = _sample_points(sigma, a, b, h)
        bad = vs < ts - _TOL * np.maximum(1.0, np.abs(ts))
        witness = f"sigma_{i}({_first(bad, ts):.12g}) < t" if bad.any() else None
        checks.append(HypothesisCheck(f"sigma_{i}(t) >= t", not bad.any(), witness))
    sup, bounded = _deviation_bound(problem, a, b, sign=1.0)
    checks.append(
        HypothesisCheck("bounded advance", bounded, None if bounded else "sigma_i(t) - t grows without bound")
    )
    return ValidationReport(tuple(checks), sup, bounded)


def validate(problem, window, h) -> ValidationReport:
    if isinstance(problem, DelayProblem):
        return validate_delay(problem, window, h)
    return validate_advanced(problem, window, h)


@dataclass(frozen=True)
class ProblemFile:
    problem: DelayProblem | AdvancedProblem
    window: tuple[float, float] | None = None
    history: PiecewiseCellFunction | None = None
    period_hint: float | None = None
    name: str = ""
    raw: dict = field(default_factory=dict, compare=False, repr=False)


def parse_problem(doc: dict, name: str = "") -> ProblemFile:
    if not isinstance(doc, dict):
        raise ProblemFormatError("top level: expected a JSON object")
    kind = doc.get("type")
    if kind not in ("delay", "advanced"):
        raise ProblemFormatError(f"type: expected 'delay' or 'advanced', got {kind!r}")
    raw_terms = doc.get("terms")
    if not isinstance(raw_terms, list) or not raw_terms:
        raise ProblemFormatError("terms: expected a non-empty list")
    terms = []
    for i, rt in enumerate(raw_terms):
        if not isinstance(rt, dict) or "p" not in rt or "arg" not in rt:
            raise ProblemFormatError(f"terms[{i}]: expected an object with fields 'p' and 'arg'")
        try:
            p = PiecewiseCellFunction.from_dict(rt["p"], f"terms[{i}].p")
            arg = PiecewiseCellFunction.from_dict(rt["arg"], f"terms[{i}].arg")
        except ValueError as exc:
            raise ProblemFormatError(str(exc)) from None
        terms.append(Term(p, arg))
    cls = DelayProblem if kind == "delay" else AdvancedProblem
    problem = cls(tuple(terms))

    window = doc.get("window")
    if window is not None:
        if not (isinstance(window, list) and len(window) == 2):
            raise ProblemFormatError("window: expected [T0, T1]")
        window = (float(window[0]), float(window[1]))
        if not window[1] > window[0]:
            raise ProblemFormatError("window: T1 must exceed T0")
    history = doc.get("history")
    if history is not None:
        try:
            history = PiecewiseCellFunction.from_dict(history, "history")
        except ValueError as exc:
            raise ProblemFormatError(str(exc)) from None
    period = doc.get("period_hint")
    if period is not None:
        period = float(period)
        if period <= 0:
            raise ProblemFormatError("period_hint: must be positive")
    return ProblemFile(problem, window, history, period, name or str(doc.get("name", "")), doc)


def load_problem(path: str | Path) -> ProblemFile:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return parse_problem(doc, name=path.stem)
    except ProblemFormatError as exc:
        raise ProblemFormatError(f"{path}: {exc}") from None
