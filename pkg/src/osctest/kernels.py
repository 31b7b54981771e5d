"""Iterated Gronwall kernels as cumulative weight tables.

The delay kernels are defined by nested integrals

    a_1(t, s)     = exp( int_s^t sum_i p_i )
    a_{r+1}(t, s) = exp( int_s^t sum_i p_i(z) a_r(z, tau_i(z)) dz )

but the integrand never depends on ``(t, s)``, so each level is
``a_r(t, s) = exp(W_r(t) - W_r(s))`` for one cumulative table ``W_r``
with weight

    w_1 = sum_i p_i,   w_{r+1}(z) = sum_i p_i(z) exp(W_r(z) - W_r(tau_i(z))).

The advanced kernels ``b_r(t, s) = exp(V_r(s) - V_r(t))``, ``s >= t``, use
``v_{r+1}(z) = sum_i p_i(z) exp(V_r(sigma_i(z)) - V_r(z))``.

Arguments that leave the grid are clamped to it, i.e. coefficients are
taken as zero outside the grid. That only ever lowers a kernel, so criteria
built on it stay sufficient; near the grid ends the tables are simply less
sharp (level ``r`` is exact about ``r`` delay spans after the start).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import CumulativeTable, Grid, QuadratureError, cumulative

__all__ = [
    "KernelTable",
    "KernelTables",
    "KernelRangeError",
    "AutonomousIterate",
    "build_kernel_delay",
    "build_kernel_advanced",
    "eval_a",
    "eval_b",
    "autonomous_iterates",
    "autonomous_lambda",
]


class KernelRangeError(ValueError):
    """A kernel was queried outside its table or with reversed arguments."""


@dataclass(frozen=True)
class KernelTable:
    r: int
    table: CumulativeTable
    weight: np.ndarray
    weight_left: np.ndarray

    @property
    def cumulative(self) -> np.ndarray:
        return self.table.values


class KernelTables:
    """Levels ``1..r_max`` of the delay (``kind='delay'``) or advanced kernels."""

    def __init__(self, problem, grid: Grid, r_max: int, kind: str):
        if r_max < 1:
            raise ValueError("r_max must be at least 1")
        self.problem = problem
        self.grid = grid
        self.kind = kind
        self.levels: list[KernelTable] = []
        nodes = grid.nodes
        for r in range(1, r_max + 1):
            right = self.weight(r, nodes)
            left = self.weight(r, nodes, left=True)
            try:
                table = cumulative(right, grid, left=left)
            except QuadratureError as exc:
                raise KernelRangeError(f"level {r}: {exc}") from None
            self.levels.append(KernelTable(r, table, right, left))

    @property
    def r_max(self) -> int:
        return len(self.levels)

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, r: int) -> KernelTable:
        if not 1 <= r <= len(self.levels):
            raise KernelRangeError(f"kernel level r={r} not built (1..{len(self.levels)})")
        return self.levels[r - 1]

    def __iter__(self):
        return iter(self.levels)

    def W(self, r: int, x, clamp: bool = True):
        """Cumulative weight of level r at arbitrary points."""
        arr = np.asarray(x, dtype=float)
        g = self.grid
        if not clamp:
            eps = 1e-9 * max(1.0, abs(g.start), abs(g.end))
            if arr.size and (np.min(arr) < g.start - eps or np.max(arr) > g.end + eps):
                bad = float(np.min(arr)) if np.min(arr) < g.start - eps else float(np.max(arr))
                raise KernelRangeError(
                    f"kernel argument {bad:.12g} outside table range [{g.start:.12g}, {g.end:.12g}]"
                )
        out = np.interp(arr, g.nodes, self[r].table.values)
        return float(out) if np.ndim(x) == 0 else out

    def weight(self, r: int, x, left: bool = False):
        """Weight ``w_r`` (delay) or ``v_r`` (advanced) at arbitrary points.

        ``r`` may exceed the built levels by one.
        """
        arr = np.asarray(x, dtype=float)
        pr = self.problem
        if r == 1:
            return pr.total_coefficient(arr, left=left)
        if r - 1 > len(self.levels):
            raise KernelRangeError(f"weight level {r} needs table level {r - 1}")
        g = self.grid
        here = self.W(r - 1, arr)
        total = np.zeros(arr.shape)
        for term in pr.terms:
            p = term.coefficient.left_limit(arr) if left else term.coefficient(arr)
            dev = term.argument.left_limit(arr) if left else term.argument(arr)
            there = self.W(r - 1, np.clip(dev, g.start, g.end))
            diff = here - there if self.kind == "delay" else there - here
            with np.errstate(over="ignore"):
                total = total + p * np.exp(diff)
        return total


def build_kernel_delay(problem, grid: Grid, r_max: int) -> KernelTables:
    """Tables ``W_1..W_{r_max}`` on ``grid``; cost ``O(r_max * N * m)``."""
    if problem.kind != "delay":
        raise ValueError("build_kernel_delay needs a delay problem")
    return KernelTables(problem, grid, r_max, "delay")


def build_kernel_advanced(problem, grid: Grid, r_max: int) -> KernelTables:
    """Tables ``V_1..V_{r_max}``; the grid should reach well past the window."""
    if problem.kind != "advanced":
        raise ValueError("build_kernel_advanced needs an advanced problem")
    return KernelTables(problem, grid, r_max, "advanced")


_ORDER_TOL = 1e-12


def eval_a(tables: KernelTables, r: int, t, s):
    """``a_r(t, s) = exp(W_r(t) - W_r(s))`` for ``s <= t``."""
    t_arr, s_arr = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    if np.any(s_arr > t_arr + _ORDER_TOL * np.maximum(1.0, np.abs(t_arr))):
        raise KernelRangeError("a_r(t, s) requires s <= t")
    out = np.exp(tables.W(r, t_arr, clamp=False) - tables.W(r, s_arr, clamp=False))
    return float(out) if out.ndim == 0 else out


def eval_b(tables: KernelTables, r: int, t, s):
    """``b_r(t, s) = exp(V_r(s) - V_r(t))`` for ``s >= t``."""
    t_arr, s_arr = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    if np.any(s_arr < t_arr - _ORDER_TOL * np.maximum(1.0, np.abs(t_arr))):
        raise KernelRangeError("b_r(t, s) requires s >= t")
    out = np.exp(tables.W(r, s_arr, clamp=False) - tables.W(r, t_arr, clamp=False))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class AutonomousIterate:
    """``lambda_0 = 1``, ``lambda_{r+1} = exp(p * lambda_r)``.

    For ``x'(t) + p x(t - 1) = 0`` this is ``a_r(t, t - 1)``; the sequence
    converges iff ``p <= 1/e``.
    """

    p: float
    lambdas: tuple[float, ...]
    diverges: bool

    def __getitem__(self, r: int) -> float:
        return self.lambdas[r]


def autonomous_iterates(p: float, r_max: int) -> AutonomousIterate:
    if p < 0:
        raise ValueError("p must be nonnegative")
    lam = [1.0]
    diverged = False
    for _ in range(r_max):
        x = p * lam[-1]
        if diverged or x > 709.0:
            diverged = True
            lam.append(math.inf)
        else:
            lam.append(math.exp(x))
    return AutonomousIterate(p, tuple(lam), diverged)


def autonomous_lambda(p: float, r: int) -> float:
    """``lambda_r``; ``inf`` once the recursion overflows (only possible for p > 1/e)."""
    if r < 1:
        raise ValueError("r must be at least 1")
    return autonomous_iterates(p, r)[r]
