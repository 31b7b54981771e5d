"""Cell-indexed, periodically extended piecewise functions.

A :class:`PiecewiseCellFunction` is defined on ``[t0, inf)``. Its cells
partition the base window ``[t0, t0 + period)``; outside the base window the
cell pattern repeats, and each cell evaluates to

    c0 + c1*t + c2*k,        k = floor((t - t0) / period)

so a cell like ``3t - 4k - 7`` on ``[2k + 2, 2k + 3)`` is stored once as
``Cell(2, 3, -7, 3, -4)`` with ``t0 = 1, period = 2``. Cell bounds ``l, u``
are absolute times inside the base window. An aperiodic function has
``period=None`` and a final cell with ``u = inf``; there ``k`` is always 0.

The ``"exp"`` form evaluates ``exp(c0 + c1*t + c2*k)`` instead and is used
for history functions and candidate solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

__all__ = [
    "Cell",
    "DomainError",
    "Piece",
    "PiecewiseCellFunction",
    "constant",
    "affine",
]

_TOL = 1e-12


class DomainError(ValueError):
    """Evaluation outside the domain of a piecewise function."""


@dataclass(frozen=True)
class Cell:
    l: float
    u: float
    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0


@dataclass(frozen=True)
class Piece:
    """One cell instance on ``[start, end)`` with value ``b + a*t`` (or its exp)."""

    start: float
    end: float
    b: float
    a: float
    cell: int
    k: int

    def value(self, t):
        return self.b + self.a * t


@dataclass(frozen=True)
class PiecewiseCellFunction:
    t0: float
    period: float | None
    cells: tuple[Cell, ...]
    form: str = "affine"

    def __post_init__(self):
        if self.form not in ("affine", "exp"):
            raise ValueError(f"unknown form {self.form!r}")
        cells = tuple(self.cells)
        object.__setattr__(self, "cells", cells)
        if not cells:
            raise ValueError("at least one cell is required")
        if self.period is not None and not self.period > 0:
            raise ValueError("period must be positive or None")
        end = self.t0 + self.period if self.period is not None else math.inf
        if abs(cells[0].l - self.t0) > _TOL * max(1.0, abs(self.t0)):
            raise ValueError(f"first cell must start at t0={self.t0}, got {cells[0].l}")
        for i, c in enumerate(cells):
            if not c.l < c.u:
                raise ValueError(f"cell {i} has empty interval [{c.l}, {c.u})")
            if i and abs(c.l - cells[i - 1].u) > _TOL * max(1.0, abs(c.l)):
                raise ValueError(f"cells {i - 1} and {i} leave a gap or overlap")
        last = cells[-1].u
        if math.isinf(end):
            if not math.isinf(last):
                raise ValueError("aperiodic function needs a final unbounded cell")
        elif abs(last - end) > _TOL * max(1.0, abs(end)):
            raise ValueError(f"cells must cover [t0, t0 + period) = [{self.t0}, {end})")
        object.__setattr__(self, "_ls", np.array([c.l for c in cells]))
        object.__setattr__(self, "_coef", np.array([[c.c0, c.c1, c.c2] for c in cells]))

    @property
    def periodic(self) -> bool:
        return self.period is not None

    # -- indexing --------------------------------------------------------

    def _locate(self, t: np.ndarray, left: bool) -> tuple[np.ndarray, np.ndarray]:
        """Return (cell index, period index) for each t.

        ``left=True`` selects the cell whose half-open interval ``(l, u]``
        contains t, which is what a left limit needs.
        """
        if self.period is None:
            k = np.zeros(t.shape, dtype=np.int64)
            red = t
        else:
            P = self.period
            x = (t - self.t0) / P
            if left:
                k = np.ceil(x).astype(np.int64) - 1
                k = np.maximum(k, 0)
            else:
                k = np.floor(x).astype(np.int64)
            red = t - k * P
            # guard against rounding pushing red outside its period window
            lo = red < self.t0 - _TOL if not left else red <= self.t0
            hi = red >= self.t0 + P if not left else red > self.t0 + P + _TOL
            k = np.where(lo & (k > 0), k - 1, k)
            k = np.where(hi, k + 1, k)
            red = t - k * P
        side = "left" if left else "right"
        idx = np.searchsorted(self._ls, red, side=side) - 1
        idx = np.clip(idx, 0, len(self.cells) - 1)
        return idx, k

    def _check_domain(self, t: np.ndarray) -> None:
        if t.size and np.min(t) < self.t0 - _TOL * max(1.0, abs(self.t0)):
            bad = float(np.min(t))
            raise DomainError(f"t={bad} lies below base_start t0={self.t0}")

    def _value(self, t, idx, k):
        coef = self._coef[idx]
        lin = coef[..., 0] + coef[..., 1] * t + coef[..., 2] * k
        return np.exp(lin) if self.form == "exp" else lin

    # -- evaluation ------------------------------------------------------

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        self._check_domain(arr)
        idx, k = self._locate(arr, left=False)
        out = self._value(arr, idx, k)
        return float(out) if np.ndim(t) == 0 else out

    def left_limit(self, t):
        """Limit from the left; equals the value wherever the function is continuous."""
        arr = np.asarray(t, dtype=float)
        self._check_domain(arr)
        idx, k = self._locate(arr, left=True)
        at_start = arr <= self.t0
        if np.any(at_start):
            idx0, k0 = self._locate(arr, left=False)
            idx = np.where(at_start, idx0, idx)
            k = np.where(at_start, k0, k)
        out = self._value(arr, idx, k)
        return float(out) if np.ndim(t) == 0 else out

    def derivative(self, t):
        """Derivative inside a cell (undefined at cell boundaries)."""
        arr = np.asarray(t, dtype=float)
        self._check_domain(arr)
        idx, k = self._locate(arr, left=False)
        slope = self._coef[idx][..., 1]
        if self.form == "exp":
            slope = slope * self._value(arr, idx, k)
        return float(slope) if np.ndim(t) == 0 else slope

    # -- structure -------------------------------------------------------

    def pieces(self, a: float, b: float) -> Iterator[Piece]:
        """Yield the cell instances intersecting ``[a, b)`` in order."""
        if a < self.t0 - _TOL * max(1.0, abs(self.t0)):
            raise DomainError(f"t={a} lies below base_start t0={self.t0}")
        a = max(a, self.t0)
        if self.period is None:
            ks = [0]
        else:
            k_lo = int(math.floor((a - self.t0) / self.period))
            k_hi = int(math.floor((b - self.t0) / self.period)) if math.isfinite(b) else k_lo
            ks = range(max(k_lo - 1, 0), k_hi + 1)
        for k in ks:
            shift = 0.0 if self.period is None else k * self.period
            for i, c in enumerate(self.cells):
                s, e = c.l + shift, c.u + shift
                if e <= a or s >= b:
                    continue
                yield Piece(max(s, a), min(e, b), c.c0 + c.c2 * k, c.c1, i, k)

    def breakpoints(self, a: float, b: float) -> np.ndarray:
        """Cell boundaries lying in ``[a, b]``."""
        pts = []
        for pc in self.pieces(a, b):
            pts.extend((pc.start, pc.end))
        pts = np.unique(np.array(pts, dtype=float))
        pts = pts[np.isfinite(pts)]
        return pts[(pts >= a) & (pts <= b)]

    def endpoint_samples(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Times and values at every piece start and (as a left limit) piece end in ``[a, b]``.

        For affine or exp cells the extrema over ``[a, b]`` are among these.
        """
        ts, vs = [], []
        for pc in self.pieces(a, b):
            for t in (pc.start, pc.end):
                if not math.isfinite(t):
                    continue
                lin = pc.value(t)
                ts.append(t)
                vs.append(math.exp(lin) if self.form == "exp" else lin)
        return np.array(ts), np.array(vs)

    def growth_per_period(self, cell: int, slope_offset: float = 0.0) -> float:
        """Per-period drift of ``f(t) - slope_offset*t`` on one cell.

        For an aperiodic function this is the asymptotic slope of the final
        cell instead.
        """
        c = self.cells[cell]
        if self.period is None:
            return c.c1 - slope_offset
        return (c.c1 - slope_offset) * self.period + c.c2

    # -- (de)serialisation -----------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "t0": self.t0,
            "period": self.period,
            "cells": [
                {"l": c.l, "u": None if math.isinf(c.u) else c.u, "c0": c.c0, "c1": c.c1, "c2": c.c2}
                for c in self.cells
            ],
        }
        if self.form != "affine":
            d["form"] = self.form
        return d

    @classmethod
    def from_dict(cls, d: dict, where: str = "piecewise") -> "PiecewiseCellFunction":
        if not isinstance(d, dict):
            raise ValueError(f"{where}: expected an object, got {type(d).__name__}")
        try:
            t0 = float(d["t0"])
            period = d.get("period")
            period = None if period is None else float(period)
            raw_cells = d["cells"]
        except KeyError as exc:
            raise ValueError(f"{where}: missing field {exc.args[0]!r}") from None
        if not isinstance(raw_cells, list):
            raise ValueError(f"{where}.cells: expected a list")
        cells = []
        for i, rc in enumerate(raw_cells):
            try:
                u = rc["u"]
                cells.append(
                    Cell(
                        float(rc["l"]),
                        math.inf if u is None else float(u),
                        float(rc.get("c0", 0.0)),
                        float(rc.get("c1", 0.0)),
                        float(rc.get("c2", 0.0)),
                    )
                )
            except KeyError as exc:
                raise ValueError(f"{where}.cells[{i}]: missing field {exc.args[0]!r}") from None
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{where}.cells[{i}]: {exc}") from None
        try:
            return cls(t0, period, tuple(cells), d.get("form", "affine"))
        except ValueError as exc:
            raise ValueError(f"{where}: {exc}") from None


def constant(value: float, t0: float = 0.0) -> PiecewiseCellFunction:
    return PiecewiseCellFunction(t0, None, (Cell(t0, math.inf, value),))


def affine(c0: float, c1: float, t0: float = 0.0) -> PiecewiseCellFunction:
    return PiecewiseCellFunction(t0, None, (Cell(t0, math.inf, c0, c1),))
