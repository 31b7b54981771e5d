"""Breakpoint-aligned grids and cumulative trapezoid tables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .envelopes import uniform_nodes

__all__ = ["Grid", "CumulativeTable", "QuadratureError", "build_grid", "cumulative", "integral_between", "grid_end"]


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    nodes: np.ndarray
    h: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise QuadratureError("a grid needs at least two nodes")
        if np.any(np.diff(nodes) <= 0):
            raise QuadratureError("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @property
    def start(self) -> float:
        return float(self.nodes[0])

    @property
    def end(self) -> float:
        return float(self.nodes[-1])

    def __len__(self) -> int:
        return self.nodes.size

    def between(self, a: float, b: float) -> np.ndarray:
        """Boolean mask of nodes in ``[a, b]`` (rounding-tolerant)."""
        eps = 1e-9 * max(1.0, abs(a), abs(b))
        return (self.nodes >= a - eps) & (self.nodes <= b + eps)


def grid_end(problem, window, advance_bound: float = 0.0, r_max: int = 1) -> float:
    """Right end of the grid: the window end, pushed out for advanced problems.

    Each kernel level looks one advance further ahead, and the criteria look
    one more, so the extension is ``(r_max + 1) * advance_bound``.
    """
    end = float(window[1])
    if problem.kind == "advanced":
        if not math.isfinite(advance_bound):
            raise QuadratureError("unbounded advance")
        end += (r_max + 1) * advance_bound
    return end


def build_grid(problem, window, h: float, advance_bound: float = 0.0, r_max: int = 1, extra=()) -> Grid:
    """Uniform nodes of step ``h`` over ``[start, end]`` united with every cell endpoint.

    ``extra`` adds further breakpoints (envelope corners).
    """
    if not h > 0:
        raise QuadratureError("step h must be positive")
    a = problem.start
    b = grid_end(problem, window, advance_bound, r_max)
    if not b > a:
        raise QuadratureError(f"grid range [{a}, {b}] is empty")
    pts = np.concatenate([problem.breakpoints(a, b), np.asarray(list(extra), dtype=float)])
    return Grid(uniform_nodes(a, b, h, pts), h)


@dataclass(frozen=True)
class CumulativeTable:
    """``values[j]`` approximates the integral of f from the first node to ``nodes[j]``."""

    grid: Grid
    values: np.ndarray

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        self._check(arr)
        out = np.interp(arr, self.grid.nodes, self.values)
        return float(out) if np.ndim(x) == 0 else out

    def _check(self, arr):
        g = self.grid
        eps = 1e-9 * max(1.0, abs(g.start), abs(g.end))
        if arr.size and (np.min(arr) < g.start - eps or np.max(arr) > g.end + eps):
            bad = float(np.min(arr)) if np.min(arr) < g.start - eps else float(np.max(arr))
            raise QuadratureError(f"query point {bad:.12g} outside table range [{g.start}, {g.end}]")


def _values(f, nodes):
    if callable(f):
        return np.asarray(f(nodes), dtype=float)
    return np.asarray(f, dtype=float)


def cumulative(f, grid: Grid, left=None) -> CumulativeTable:
    """Trapezoid prefix sums of ``f`` on ``grid``.

    ``f`` is a callable or an array of node values. Where ``f`` jumps at a
    node, pass its left limits as ``left`` so each subinterval uses the
    value from its own side; the rule is then exact for integrands that are
    affine between nodes.
    """
    nodes = grid.nodes
    right = _values(f, nodes)
    lft = right if left is None else _values(left, nodes)
    if not (np.all(np.isfinite(right)) and np.all(np.isfinite(lft))):
        bad = nodes[~(np.isfinite(right) & np.isfinite(lft))][0]
        raise QuadratureError(f"integrand is not finite at node t={bad:.12g}")
    steps = 0.5 * (right[:-1] + lft[1:]) * np.diff(nodes)
    return CumulativeTable(grid, np.concatenate([[0.0], np.cumsum(steps)]))


def integral_between(table: CumulativeTable, a, b):
    """``F(b) - F(a)`` with linear interpolation off the nodes."""
    return table(b) - table(a)
