"""Oscillation criteria and their aggregation.

Every criterion samples an integral functional ``f(t)`` on the grid nodes of
the analysis window, reduces it to a limsup or liminf estimate over the tail
of the window, and compares that with its threshold. A criterion only fires
when the estimate clears the threshold by the strictness margin; failing to
fire never means the equation is nonoscillatory.

Criterion ids follow the report format:

delay      THM_2_4, THM_2_4_ALPHA, THM_3_3 (iterated kernels, any r),
           BK_1_12, STAVROULAKIS_THM2 (single-term forms at r = 1),
           LADDE_1_8, HUNT_YORKE_1_10 (classical 1/e tests)
advanced   THM_2_4A, THM_2_4AB, THM_2_5B (iterated kernels, any r),
           CO_1_13, CO_1_14, LADAS_ADV_1_9, ZHOU_1_11
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .envelopes import EnvelopeFunction, combine_max, combine_min, running_inf, running_sup
from .kernels import KernelRangeError, KernelTables, build_kernel_advanced, build_kernel_delay
from .problem import ValidationReport, validate_advanced, validate_delay
from .quadrature import CumulativeTable, Grid, build_grid, cumulative, grid_end

__all__ = [
    "OSCILLATORY",
    "INCONCLUSIVE",
    "PRECONDITION_FAILED",
    "INV_E",
    "CriterionReport",
    "OverallVerdict",
    "Context",
    "EstimateError",
    "WarmupError",
    "prepare",
    "limsup_estimate",
    "liminf_estimate",
    "alpha_threshold",
    "alpha_delay",
    "alpha_advanced",
    "delay_kernel_functional",
    "delay_local_kernel_functional",
    "advanced_kernel_functional",
    "advanced_local_kernel_functional",
    "crit_thm_2_4",
    "crit_thm_2_4_alpha",
    "crit_thm_3_3",
    "crit_classical_delay",
    "crit_single_delay",
    "crit_thm_2_4a",
    "crit_thm_2_4ab",
    "crit_thm_2_5b",
    "crit_classical_advanced",
    "evaluate_all",
    "aggregate",
    "DELAY_ORDER",
    "ADVANCED_ORDER",
]

OSCILLATORY = "OSCILLATORY"
INCONCLUSIVE = "INCONCLUSIVE"
PRECONDITION_FAILED = "PRECONDITION_FAILED"

INV_E = math.exp(-1.0)

DELAY_ORDER = ("THM_2_4", "THM_2_4_ALPHA", "THM_3_3", "BK_1_12", "STAVROULAKIS_THM2", "LADDE_1_8", "HUNT_YORKE_1_10")
ADVANCED_ORDER = ("THM_2_4A", "THM_2_4AB", "THM_2_5B", "CO_1_13", "CO_1_14", "LADAS_ADV_1_9", "ZHOU_1_11")

_DELAY_ANNOTATIONS = (
    "x'(t) + sum_i p_i(t) x(tau_i(t)) <= 0 has no eventually positive solution",
    "x'(t) + sum_i p_i(t) x(tau_i(t)) >= 0 has no eventually negative solution",
)
_ADVANCED_ANNOTATIONS = (
    "x'(t) - sum_i p_i(t) x(sigma_i(t)) >= 0 has no eventually positive solution",
    "x'(t) - sum_i p_i(t) x(sigma_i(t)) <= 0 has no eventually negative solution",
)


class EstimateError(ValueError):
    """Too few samples for a tail estimate."""


class WarmupError(KernelRangeError):
    """The analysis window starts before the kernels have enough history."""


@dataclass
class CriterionReport:
    id: str
    r: int | None
    kind: str
    threshold: float
    verdict: str
    estimate: float | None = None
    nodes: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    values: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    alpha: float | None = None
    notes: list[str] = field(default_factory=list)
    annotations: list[str] = field(default_factory=list)

    @property
    def margin(self) -> float | None:
        if self.estimate is None:
            return None
        return self.estimate - self.threshold

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "r": self.r,
            "kind": self.kind,
            "estimate": self.estimate,
            "threshold": self.threshold,
            "margin": self.margin,
            "verdict": self.verdict,
        }
        if self.alpha is not None:
            d["alpha"] = self.alpha
        if self.notes:
            d["notes"] = list(self.notes)
        if self.annotations:
            d["annotations"] = list(self.annotations)
        return d


@dataclass(frozen=True)
class OverallVerdict:
    verdict: str
    by: str | None = None
    r: int | None = None
    annotations: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "by": self.by, "r": self.r, "annotations": list(self.annotations)}


# -- tail estimates ------------------------------------------------------


def _tail_mask(nodes: np.ndarray, window, period_hint) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=float)
    T0, T1 = float(window[0]), float(window[1])
    if period_hint is not None:
        if T1 - T0 < 2 * period_hint - 1e-9:
            raise EstimateError(f"window [{T0}, {T1}] covers fewer than two periods of {period_hint}")
        eps = 1e-9 * max(1.0, abs(T1))
        mask = (nodes >= T1 - period_hint - eps) & (nodes <= T1 + eps)
    else:
        inside = np.flatnonzero((nodes >= T0) & (nodes <= T1))
        mask = np.zeros(nodes.shape, dtype=bool)
        mask[inside[inside.size // 2 :]] = True
    if mask.sum() < 2:
        raise EstimateError("too few samples for a tail estimate")
    return mask


def limsup_estimate(values, nodes, window, period_hint=None) -> float:
    """Max over the last full period (or the last half of the window without a hint)."""
    values = np.asarray(values, dtype=float)
    return float(np.max(values[_tail_mask(nodes, window, period_hint)]))


def liminf_estimate(values, nodes, window, period_hint=None) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.min(values[_tail_mask(nodes, window, period_hint)]))


def alpha_threshold(alpha: float) -> float:
    """``1 - (1 - a - sqrt(1 - 2a - a^2)) / 2``; equals 1 at a = 0."""
    return 1.0 - (1.0 - alpha - math.sqrt(1.0 - 2.0 * alpha - alpha * alpha)) / 2.0


# -- analysis context ----------------------------------------------------


@dataclass
class Context:
    """Everything the criteria share: validation, envelopes, grid, kernels."""

    problem: object
    window: tuple[float, float]
    h: float
    r_max: int
    period_hint: float | None
    margin: float
    validation: ValidationReport
    envelopes: list[EnvelopeFunction]
    envelope: EnvelopeFunction
    grid: Grid
    kernels: KernelTables
    sum_p: CumulativeTable

    @property
    def eval_mask(self) -> np.ndarray:
        return self.grid.between(*self.window)

    @property
    def eval_nodes(self) -> np.ndarray:
        return self.grid.nodes[self.eval_mask]

    @property
    def is_delay(self) -> bool:
        return self.problem.kind == "delay"


def prepare(problem, window, h: float = 1e-3, r_max: int = 5, period_hint=None, margin: float = 1e-6) -> Context:
    """Validate, build envelopes, grid and kernel tables up to ``r_max``."""
    window = (float(window[0]), float(window[1]))
    if not window[1] > window[0]:
        raise ValueError("window must have T1 > T0")
    if window[0] < problem.start:
        raise ValueError(f"window starts before the equation does (t0={problem.start})")
    if r_max < 1:
        raise ValueError("r_max must be at least 1")
    if problem.kind == "delay":
        validation = validate_delay(problem, window, h)
        delta = 0.0
        reach = (problem.start, window[1])
        sweep, join = running_sup, combine_max
    else:
        validation = validate_advanced(problem, window, h)
        delta = validation.advance_bound
        end = grid_end(problem, window, delta, r_max)
        reach = (problem.start, end - delta)
        sweep, join = running_inf, combine_min

    def envelopes(nodes):
        if problem.kind == "delay":
            return [sweep(a, reach, h, nodes=nodes) for a in problem.arguments]
        return [sweep(a, reach, h, nodes=nodes, advance_bound=delta) for a in problem.arguments]

    if all(a.form == "affine" for a in problem.arguments):
        envs = envelopes(np.array(reach))
        corners = np.concatenate([e.breakpoints() for e in envs + [join(envs)]])
        grid = build_grid(problem, window, h, advance_bound=delta, r_max=r_max, extra=corners)
        env_nodes = grid.nodes[(grid.nodes >= reach[0]) & (grid.nodes <= reach[1] + 1e-9)]
        envs = [e.resample(env_nodes) for e in envs]
    else:
        grid = build_grid(problem, window, h, advance_bound=delta, r_max=r_max)
        envs = envelopes(grid.nodes[(grid.nodes >= reach[0]) & (grid.nodes <= reach[1] + 1e-9)])
    combined = join(envs)
    # higher levels can overflow when the hypotheses fail; criteria are skipped then anyway
    levels = r_max if validation.ok else 1
    if problem.kind == "delay":
        kernels = build_kernel_delay(problem, grid, levels)
    else:
        kernels = build_kernel_advanced(problem, grid, levels)
    sum_p = kernels[1].table
    return Context(problem, window, h, r_max, period_hint, margin, validation, envs, combined, grid, kernels, sum_p)


def _check_delay_range(ctx: Context) -> None:
    """Every kernel query in the window must land inside the tables."""
    T0, T1 = ctx.window
    g0 = float(ctx.envelope(T0))
    start = ctx.grid.start
    if g0 < start - 1e-12:
        raise WarmupError(f"g({T0:.12g}) = {g0:.12g} lies before the table start {start:.12g}; start the window later")
    for i, tau in enumerate(ctx.problem.arguments, start=1):
        ts, vs = tau.endpoint_samples(g0, T1)
        if vs.size and np.min(vs) < start - 1e-12:
            j = int(np.argmin(vs))
            raise WarmupError(
                f"tau_{i}({ts[j]:.12g}) = {vs[j]:.12g} lies before the table start {start:.12g}; "
                "start the window at least one maximal delay later"
            )


# -- window integrals ----------------------------------------------------


def _window_integrals(nodes, u_right, u_left, S, lo, hi, u_lo, u_hi, S_lo, S_hi, c) -> np.ndarray:
    """Trapezoid integrals of ``u(z) * exp(c_j - S(z))`` over ``[lo_j, hi_j]``.

    ``u`` may jump at nodes (``u_right``/``u_left`` give both sides); ``S``
    is continuous. Endpoints off the grid are supplied explicitly.
    """
    out = np.zeros(len(lo))
    eps = 1e-12 * max(1.0, float(np.max(np.abs(nodes))))
    i0s = np.searchsorted(nodes, np.asarray(lo) + eps, side="left")
    i1s = np.searchsorted(nodes, np.asarray(hi) - eps, side="right")
    for j in range(len(lo)):
        a, b = lo[j], hi[j]
        if not b > a:
            continue
        i0, i1 = i0s[j], i1s[j]
        xs = np.concatenate(([a], nodes[i0:i1], [b]))
        ss = np.concatenate(([S_lo[j]], S[i0:i1], [S_hi[j]]))
        e = np.exp(c[j] - ss)
        r_vals = np.concatenate(([u_lo[j]], u_right[i0:i1]))
        l_vals = np.concatenate((u_left[i0:i1], [u_hi[j]]))
        out[j] = 0.5 * np.sum((r_vals * e[:-1] + l_vals * e[1:]) * np.diff(xs))
    return out


def _node_index(ctx: Context, t: np.ndarray) -> np.ndarray:
    return np.searchsorted(ctx.grid.nodes, t)


def delay_kernel_functional(ctx: Context, r: int) -> np.ndarray:
    """``int_{g(t)}^t sum_i p_i(z) a_r(g(t), tau_i(z)) dz`` at every window node."""
    _check_delay_range(ctx)
    K = ctx.kernels
    t = ctx.eval_nodes
    g = ctx.envelope(t)
    nodes = ctx.grid.nodes
    W = K[r].table.values
    u_right = K.weight(r + 1, nodes)
    u_left = K.weight(r + 1, nodes, left=True)
    Wg = K.W(r, g)
    jt = _node_index(ctx, t)
    return _window_integrals(nodes, u_right, u_left, W, g, t, K.weight(r + 1, g), u_left[jt], Wg, W[jt], Wg)


def delay_local_kernel_functional(ctx: Context, r: int) -> np.ndarray:
    """``int_{g(t)}^t sum_i p_i(z) a_r(g(z), tau_i(z)) dz``; the kernel moves with z."""
    _check_delay_range(ctx)
    K = ctx.kernels
    nodes = ctx.grid.nodes
    start = ctx.grid.start

    def q(x, left=False):
        g = ctx.envelope.left_limit(x) if left else ctx.envelope(x)
        Wg = K.W(r, g)
        total = np.zeros(np.shape(x))
        for term in ctx.problem.terms:
            p = term.coefficient.left_limit(x) if left else term.coefficient(x)
            tau = term.argument.left_limit(x) if left else term.argument(x)
            total = total + p * np.exp(Wg - K.W(r, np.maximum(tau, start)))
        return total

    Q = cumulative(q(nodes), ctx.grid, left=q(nodes, left=True))
    t = ctx.eval_nodes
    return Q(t) - Q(ctx.envelope(t))


def advanced_kernel_functional(ctx: Context, r: int) -> np.ndarray:
    """``int_t^{rho(t)} sum_i p_i(z) b_r(rho(t), sigma_i(z)) dz`` at every window node."""
    K = ctx.kernels
    t = ctx.eval_nodes
    rho = ctx.envelope(t)
    nodes = ctx.grid.nodes
    V = K[r].table.values
    u_right = K.weight(r + 1, nodes)
    u_left = K.weight(r + 1, nodes, left=True)
    Vrho = K.W(r, rho, clamp=False)
    jt = _node_index(ctx, t)
    return _window_integrals(
        nodes, u_right, u_left, -V, t, rho, u_right[jt], K.weight(r + 1, rho, left=True), -V[jt], -Vrho, -Vrho
    )


def advanced_local_kernel_functional(ctx: Context, r: int) -> np.ndarray:
    """``sum_i int_t^{rho(t)} p_i(z) b_r(rho(z), sigma_i(z)) dz``."""
    K = ctx.kernels
    nodes = ctx.grid.nodes
    end = ctx.grid.end
    lo, hi = ctx.envelope.domain
    sub = Grid(nodes[(nodes >= lo) & (nodes <= hi)], ctx.grid.h)

    def q(x, left=False):
        rho = ctx.envelope.left_limit(x) if left else ctx.envelope(x)
        Vr = K.W(r, rho)
        total = np.zeros(np.shape(x))
        for term in ctx.problem.terms:
            p = term.coefficient.left_limit(x) if left else term.coefficient(x)
            sig = term.argument.left_limit(x) if left else term.argument(x)
            total = total + p * np.exp(K.W(r, np.minimum(sig, end)) - Vr)
        return total

    Q = cumulative(q(sub.nodes), sub, left=q(sub.nodes, left=True))
    t = ctx.eval_nodes
    return Q(ctx.envelope(t)) - Q(t)


def _per_term_envelope_functional(ctx: Context) -> np.ndarray:
    """``int_t^{rho(t)} sum_i p_i(s) exp(sum_j int_{rho_i(t)}^{sigma_i(s)} p_j) ds``."""
    K = ctx.kernels
    nodes = ctx.grid.nodes
    V = K[1].table.values
    t = ctx.eval_nodes
    rho = ctx.envelope(t)
    jt = _node_index(ctx, t)
    Vrho = K.W(1, rho, clamp=False)
    total = np.zeros(t.shape)
    reach = nodes[(nodes >= t[0]) & (nodes <= ctx.envelope.domain[1])]
    for i, (term, env_i) in enumerate(zip(ctx.problem.terms, ctx.envelopes), start=1):
        # rho_i is non-decreasing, so sigma_i >= rho_i pointwise gives sigma_i(s) >= rho_i(t) for s >= t
        gap = term.argument(reach) - env_i(reach)
        if np.min(gap) < -1e-9:
            bad = float(reach[int(np.argmin(gap))])
            raise ValueError(f"sigma_{i}({bad:.12g}) lies below rho_{i}; envelope orientation violated")
        rho_i = env_i(t)
        p, sig = term.coefficient, term.argument

        def u(x, left=False):
            pv = p.left_limit(x) if left else p(x)
            sv = sig.left_limit(x) if left else sig(x)
            return pv * np.exp(K.W(1, np.minimum(sv, ctx.grid.end)) - K.W(1, x))

        c = -K.W(1, rho_i, clamp=False)
        total += _window_integrals(
            nodes, u(nodes), u(nodes, left=True), -V, t, rho, u(t), u(rho, left=True), -V[jt], -Vrho, c
        )
    return total


# -- report assembly -----------------------------------------------------


def _report(ctx, cid, r, kind, values, threshold, alpha=None, notes=(), precondition=None) -> CriterionReport:
    nodes = ctx.eval_nodes
    notes = list(notes)
    if ctx.period_hint is None:
        notes.append("window-limited estimate: tail half of the window, no period hint")
    if not ctx.validation.ok:
        return CriterionReport(cid, r, kind, threshold, PRECONDITION_FAILED, None, nodes, values, alpha,
                               notes + ["problem hypotheses failed validation"])
    reducer = limsup_estimate if kind == "limsup" else liminf_estimate
    est = reducer(values, nodes, ctx.window, ctx.period_hint)
    if precondition is not None:
        notes.append(precondition)
        return CriterionReport(cid, r, kind, threshold, PRECONDITION_FAILED, est, nodes, values, alpha, notes)
    verdict = OSCILLATORY if est - threshold > ctx.margin else INCONCLUSIVE
    annotations = []
    if verdict == OSCILLATORY:
        annotations = list(_DELAY_ANNOTATIONS if ctx.is_delay else _ADVANCED_ANNOTATIONS)
    return CriterionReport(cid, r, kind, threshold, verdict, est, nodes, values, alpha, notes, annotations)


def _alpha_precondition(alpha: float) -> str | None:
    if not alpha > 1e-12:
        return f"alpha = {alpha:.12g} is not positive"
    if alpha > INV_E + 1e-9:
        return f"alpha = {alpha:.12g} exceeds 1/e"
    return None


def _safe_alpha_threshold(alpha: float) -> float:
    return alpha_threshold(min(max(alpha, 0.0), INV_E))


def _tail(ctx, values, kind) -> float:
    reducer = limsup_estimate if kind == "limsup" else liminf_estimate
    return reducer(values, ctx.eval_nodes, ctx.window, ctx.period_hint)


# -- delay criteria ------------------------------------------------------


def alpha_delay(ctx: Context) -> float:
    """liminf of ``int_{g(t)}^t sum_i p_i``."""
    t = ctx.eval_nodes
    return _tail(ctx, ctx.sum_p(t) - ctx.sum_p(ctx.envelope(t)), "liminf")


def crit_thm_2_4(ctx: Context, r: int, values=None) -> CriterionReport:
    values = delay_kernel_functional(ctx, r) if values is None else values
    return _report(ctx, "THM_2_4", r, "limsup", values, 1.0)


def crit_thm_2_4_alpha(ctx: Context, r: int, values=None, alpha=None) -> CriterionReport:
    values = delay_kernel_functional(ctx, r) if values is None else values
    alpha = alpha_delay(ctx) if alpha is None else alpha
    return _report(ctx, "THM_2_4_ALPHA", r, "limsup", values, _safe_alpha_threshold(alpha), alpha,
                   precondition=_alpha_precondition(alpha))


def crit_thm_3_3(ctx: Context, r: int) -> CriterionReport:
    return _report(ctx, "THM_3_3", r, "liminf", delay_local_kernel_functional(ctx, r), INV_E)


def _bounded_note(ctx: Context, label: str) -> str | None:
    if ctx.validation.bounded_deviation:
        return None
    return f"{label} is unbounded"


def crit_classical_delay(ctx: Context) -> list[CriterionReport]:
    """The liminf-over-largest-delay and the Hunt-Yorke weighted-delay tests against 1/e."""
    _check_delay_range(ctx)
    t = ctx.eval_nodes
    args = ctx.problem.arguments
    tau_max = np.max([tau(t) for tau in args], axis=0)
    ladde = ctx.sum_p(t) - ctx.sum_p(tau_max)
    hy = sum(term.coefficient(t) * (t - term.argument(t)) for term in ctx.problem.terms)
    return [
        _report(ctx, "LADDE_1_8", None, "liminf", ladde, INV_E),
        _report(ctx, "HUNT_YORKE_1_10", None, "liminf", hy, INV_E,
                precondition=_bounded_note(ctx, "t - tau_i(t)")),
    ]


def crit_single_delay(ctx: Context, values=None) -> list[CriterionReport]:
    """Single-delay forms: the r = 1 kernel functional against 1 and against the alpha threshold.

    Here alpha is taken over ``[tau(t), t]`` rather than ``[g(t), t]``.
    """
    if ctx.problem.m != 1:
        return []
    values = delay_kernel_functional(ctx, 1) if values is None else values
    t = ctx.eval_nodes
    tau = ctx.problem.arguments[0]
    alpha = _tail(ctx, ctx.sum_p(t) - ctx.sum_p(tau(t)), "liminf")
    note = "same functional as THM_2_4 at r = 1 with a single delay"
    return [
        _report(ctx, "BK_1_12", 1, "limsup", values, 1.0, notes=[note]),
        _report(ctx, "STAVROULAKIS_THM2", 1, "limsup", values, _safe_alpha_threshold(alpha), alpha,
                notes=[note + "; alpha over [tau(t), t]"], precondition=_alpha_precondition(alpha)),
    ]


# -- advanced criteria ---------------------------------------------------


def alpha_advanced(ctx: Context) -> float:
    """liminf of ``int_t^{rho(t)} sum_i p_i``."""
    t = ctx.eval_nodes
    return _tail(ctx, ctx.sum_p(ctx.envelope(t)) - ctx.sum_p(t), "liminf")


def crit_thm_2_4a(ctx: Context, r: int, values=None) -> CriterionReport:
    values = advanced_kernel_functional(ctx, r) if values is None else values
    return _report(ctx, "THM_2_4A", r, "limsup", values, 1.0)


def crit_thm_2_4ab(ctx: Context, r: int, values=None, alpha=None) -> CriterionReport:
    values = advanced_kernel_functional(ctx, r) if values is None else values
    alpha = alpha_advanced(ctx) if alpha is None else alpha
    return _report(ctx, "THM_2_4AB", r, "limsup", values, _safe_alpha_threshold(alpha), alpha,
                   precondition=_alpha_precondition(alpha))


def crit_thm_2_5b(ctx: Context, r: int) -> CriterionReport:
    return _report(ctx, "THM_2_5B", r, "liminf", advanced_local_kernel_functional(ctx, r), INV_E)


def crit_classical_advanced(ctx: Context) -> list[CriterionReport]:
    t = ctx.eval_nodes
    args = ctx.problem.arguments
    sigma_min = np.min([s(t) for s in args], axis=0)
    ladas = ctx.sum_p(sigma_min) - ctx.sum_p(t)
    zhou = sum(term.coefficient(t) * (term.argument(t) - t) for term in ctx.problem.terms)
    co = _per_term_envelope_functional(ctx)
    return [
        _report(ctx, "CO_1_13", None, "limsup", co, 1.0),
        _report(ctx, "CO_1_14", None, "liminf", co, INV_E),
        _report(ctx, "LADAS_ADV_1_9", None, "liminf", ladas, INV_E),
        _report(ctx, "ZHOU_1_11", None, "liminf", zhou, INV_E, precondition=_bounded_note(ctx, "sigma_i(t) - t")),
    ]


# -- driver --------------------------------------------------------------


def _max_workers(max_workers):
    if max_workers is not None:
        return max(1, int(max_workers))
    env = os.environ.get("OSC_TEST_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _sort_key(order):
    rank = {cid: i for i, cid in enumerate(order)}
    return lambda rep: (rank[rep.id], rep.r or 0)


def evaluate_all(ctx: Context, r_values=None, max_workers=None) -> list[CriterionReport]:
    """Every criterion for every ``r`` in ``r_values`` (default ``1..r_max``), in report order."""
    r_values = list(range(1, ctx.r_max + 1)) if r_values is None else list(r_values)
    if not ctx.validation.ok:
        order = DELAY_ORDER if ctx.is_delay else ADVANCED_ORDER
        reps = []
        for cid in order:
            if cid in ("BK_1_12", "STAVROULAKIS_THM2") and ctx.problem.m != 1:
                continue
            rs = r_values if cid.startswith("THM") else [1 if cid in ("BK_1_12", "STAVROULAKIS_THM2") else None]
            for r in rs:
                reps.append(CriterionReport(cid, r, "", math.nan, PRECONDITION_FAILED,
                                            notes=["problem hypotheses failed validation"]))
        return reps

    if ctx.is_delay:
        alpha = alpha_delay(ctx)

        def per_r(r):
            f = delay_kernel_functional(ctx, r)
            out = [crit_thm_2_4(ctx, r, f), crit_thm_2_4_alpha(ctx, r, f, alpha), crit_thm_3_3(ctx, r)]
            if r == 1:
                out += crit_single_delay(ctx, f)
            return out

        classical = crit_classical_delay
        order = DELAY_ORDER
    else:
        alpha = alpha_advanced(ctx)

        def per_r(r):
            f = advanced_kernel_functional(ctx, r)
            return [crit_thm_2_4a(ctx, r, f), crit_thm_2_4ab(ctx, r, f, alpha), crit_thm_2_5b(ctx, r)]

        classical = crit_classical_advanced
        order = ADVANCED_ORDER

    workers = _max_workers(max_workers)
    if workers > 1 and len(r_values) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(per_r, r_values))
    else:
        chunks = [per_r(r) for r in r_values]
    reports = [rep for chunk in chunks for rep in chunk] + classical(ctx)
    if ctx.is_delay and 1 not in r_values:
        reports += crit_single_delay(ctx)
    return sorted(reports, key=_sort_key(order))


def aggregate(reports) -> OverallVerdict:
    """OSCILLATORY if any criterion fired: the first in report order, at its smallest r."""
    reports = list(reports)
    if not reports:
        raise ValueError("no criterion reports to aggregate")
    fired = [rep for rep in reports if rep.verdict == OSCILLATORY]
    if not fired:
        return OverallVerdict(INCONCLUSIVE)
    order = DELAY_ORDER if fired[0].id in DELAY_ORDER else ADVANCED_ORDER
    best = sorted(fired, key=_sort_key(order))[0]
    return OverallVerdict(OSCILLATORY, best.id, best.r, tuple(best.annotations))
