"""Method-of-steps integration of delay equations.

Classical RK4 on a uniform grid; delayed values come from linear
interpolation of the stored solution, or of the history for arguments at or
before the start. A single trajectory that changes sign only corroborates
oscillation, it proves nothing about all solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .piecewise import PiecewiseCellFunction

__all__ = [
    "SimulationError",
    "Trajectory",
    "SignChanges",
    "integrate_delay",
    "count_sign_changes",
    "residual_check",
]

ZERO_TOUCH = 1e-12


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SignChanges:
    count: int
    brackets: tuple[tuple[float, float], ...]
    zero_touches: tuple[float, ...] = ()

    @property
    def locations(self) -> list[float]:
        """Linear-interpolation estimate of each crossing."""
        return [0.5 * (a + b) for a, b in self.brackets]


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    h: float
    history: PiecewiseCellFunction
    signs: SignChanges = field(init=False)
    max_residual: float | None = None

    def __post_init__(self):
        self.signs = count_sign_changes(self.t, self.x)

    @property
    def sign_changes(self) -> int:
        return self.signs.count

    @property
    def final_value(self) -> float:
        return float(self.x[-1])

    def __call__(self, s):
        """Solution at arbitrary times (history before the start)."""
        s = np.asarray(s, dtype=float)
        out = np.interp(s, self.t, self.x)
        before = s < self.t[0]
        if np.any(before):
            out = np.where(before, self.history(np.where(before, s, self.t[0])), out)
        return float(out) if out.ndim == 0 else out

    def summary(self) -> dict:
        return {
            "sign_changes": self.sign_changes,
            "locations": self.signs.locations,
            "zero_touches": list(self.signs.zero_touches),
            "final_value": self.final_value,
            "max_residual": self.max_residual,
        }


def count_sign_changes(t, x) -> SignChanges:
    """Consecutive samples with a strictly negative product; near-zeros are listed apart."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise SimulationError("trajectory is not finite")
    idx = np.flatnonzero(x[:-1] * x[1:] < 0)
    brackets = tuple((float(t[i]), float(t[i + 1])) for i in idx)
    touches = tuple(float(v) for v in t[np.abs(x) < ZERO_TOUCH])
    return SignChanges(len(brackets), brackets, touches)


def integrate_delay(problem, history: PiecewiseCellFunction, horizon: float, h: float = 1e-3) -> Trajectory:
    """Solve ``x'(t) = -sum_i p_i(t) x(tau_i(t))`` on ``[start, horizon]``.

    Parameters
    ----------
    problem : DelayProblem
        Advanced problems are refused; they are not forward initial-value
        problems.
    history : PiecewiseCellFunction
        Values for ``t <= start``; must reach back to the smallest delayed
        argument that occurs.
    horizon : float
        Final time.
    h : float
        Uniform step.
    """
    if problem.kind != "delay":
        raise SimulationError("advanced equations cannot be integrated forward from a history")
    if not h > 0:
        raise SimulationError("step must be positive")
    t_start = problem.start
    if not horizon > t_start:
        raise SimulationError(f"horizon {horizon} must exceed the start {t_start}")
    n = int(math.ceil((horizon - t_start) / h - 1e-9))
    h = (horizon - t_start) / n
    # stage times on the half-step lattice: node j of `half` is t_start + j*h/2
    half = t_start + 0.5 * h * np.arange(2 * n + 1)
    # breakpoints that fall on the lattice must hit it exactly, or a rounded-low
    # node would evaluate the cell before the jump
    bps = problem.breakpoints(t_start, horizon)
    idx = np.rint((bps - t_start) / (0.5 * h)).astype(int)
    on = (idx >= 0) & (idx <= 2 * n)
    idx, bps = idx[on], bps[on]
    snap = np.abs(half[idx] - bps) <= 1e-9 * max(1.0, abs(horizon))
    half[idx[snap]] = bps[snap]
    # right values at step starts and midpoints, left limits at step ends; an
    # even lattice node is both, so both sides are kept (axis 0: right, left)
    ps = np.array([[term.coefficient(half) for term in problem.terms],
                   [term.coefficient.left_limit(half) for term in problem.terms]])
    taus = np.array([[term.argument(half) for term in problem.terms],
                     [term.argument.left_limit(half) for term in problem.terms]])
    if np.any(taus > half + 1e-12 * np.maximum(1.0, np.abs(half))):
        raise SimulationError("an argument exceeds t; not a delay equation")
    lowest = float(np.min(taus))
    if lowest < history.t0 - 1e-12 * max(1.0, abs(history.t0)):
        raise SimulationError(f"delayed lookup at {lowest:.12g} before the history start {history.t0:.12g}")
    in_hist = taus <= t_start
    hist_vals = np.where(in_hist, history(np.where(in_hist, taus, history.t0)), 0.0)
    # fractional step position of every delayed argument
    pos = (taus - t_start) / h

    x = np.empty(n + 1)
    x[0] = float(history(t_start)) if history.t0 <= t_start else math.nan
    if not math.isfinite(x[0]):
        raise SimulationError("history does not cover the start")
    m = len(problem.terms)

    def delayed(j, step, frac_stage, y_stage):
        """sum_i p_i x(tau_i) at half-lattice index j during step `step`."""
        side = 1 if frac_stage == 1.0 else 0
        total = 0.0
        for i in range(m):
            p = ps[side, i, j]
            if p == 0.0:
                continue
            if in_hist[side, i, j]:
                v = hist_vals[side, i, j]
            else:
                q = pos[side, i, j]
                if q > step + 1e-12:
                    # inside the current step: between (t_n, x_n) and the stage estimate
                    w = (q - step) / frac_stage if frac_stage > 0 else 1.0
                    v = x[step] + min(w, 1.0) * (y_stage - x[step])
                else:
                    k = min(int(q), step)
                    w = q - k
                    v = x[k] if w <= 0 or k == step else x[k] + w * (x[k + 1] - x[k])
            total += p * v
        return total

    for s in range(n):
        j = 2 * s
        x0 = x[s]
        k1 = -delayed(j, s, 0.0, x0)
        y2 = x0 + 0.5 * h * k1
        k2 = -delayed(j + 1, s, 0.5, y2)
        y3 = x0 + 0.5 * h * k2
        k3 = -delayed(j + 1, s, 0.5, y3)
        y4 = x0 + h * k3
        k4 = -delayed(j + 2, s, 1.0, y4)
        x1 = x0 + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not math.isfinite(x1):
            raise SimulationError(f"solution diverged near t={t_start + (s + 1) * h:.12g}")
        x[s + 1] = x1
    t = half[::2].copy()
    t[-1] = horizon
    return Trajectory(t, x, h, history)


def residual_check(problem, candidate: PiecewiseCellFunction, history: PiecewiseCellFunction | None, nodes) -> float:
    """Largest ``|x'(t) +/- sum_i p_i(t) x(arg_i(t))|`` of a candidate solution.

    ``x'`` is the candidate's exact per-cell derivative. Nodes on a cell
    boundary of the candidate or the problem are skipped; every candidate
    boundary inside the node range must itself be a node.
    """
    nodes = np.asarray(nodes, dtype=float)
    a, b = float(nodes[0]), float(nodes[-1])
    lo = max(a, candidate.t0)
    scale = max(1.0, abs(a), abs(b))
    tol = 1e-9 * scale
    cb = candidate.breakpoints(lo, b)
    near = np.searchsorted(nodes, cb)
    for bp, j in zip(cb, near):
        ok = any(0 <= k < nodes.size and abs(nodes[k] - bp) <= tol for k in (j - 1, j))
        if not ok:
            raise SimulationError(f"candidate cell boundary {bp:.12g} is not a grid node")
    corners = np.unique(np.concatenate([cb, problem.breakpoints(max(a, problem.start), b)]))
    keep = nodes >= lo
    if corners.size:
        j = np.searchsorted(corners, nodes)
        after = corners[np.minimum(j, corners.size - 1)]
        before = corners[np.maximum(j - 1, 0)]
        keep &= np.minimum(np.abs(nodes - after), np.abs(nodes - before)) > tol
    t = nodes[keep]
    if t.size == 0:
        return 0.0

    def x_of(s):
        s = np.asarray(s, dtype=float)
        early = s < candidate.t0
        if np.any(early) and history is None:
            raise SimulationError("candidate needs a history before its start")
        out = candidate(np.where(early, candidate.t0, s))
        if np.any(early):
            out = np.where(early, history(np.where(early, s, history.t0)), out)
        return out

    sign = 1.0 if problem.kind == "delay" else -1.0
    res = candidate.derivative(t)
    for term in problem.terms:
        res = res + sign * term.coefficient(t) * x_of(term.argument(t))
    return float(np.max(np.abs(res)))
