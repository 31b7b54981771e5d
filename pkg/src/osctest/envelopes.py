"""Monotone envelopes of non-monotone deviating arguments.

``running_sup`` gives ``g_i(t) = sup_{start <= s <= t} tau_i(s)`` and
``running_inf`` gives ``rho_i(t) = inf_{s >= t} sigma_i(s)``; ``combine_max``
and ``combine_min`` take the pointwise max/min over several of them.

For affine cells the envelope is again piecewise affine and is computed
exactly by one sweep over the pieces (forward for sup, backward for inf).
Anything else falls back to prefix/suffix extrema over a sampled grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .piecewise import PiecewiseCellFunction

__all__ = [
    "EnvelopeFunction",
    "EnvelopeError",
    "running_sup",
    "running_inf",
    "combine_max",
    "combine_min",
    "uniform_nodes",
]


class EnvelopeError(ValueError):
    pass


@dataclass(frozen=True)
class _Seg:
    start: float
    end: float
    b: float
    a: float

    def at(self, t):
        return self.b + self.a * t


@dataclass(frozen=True)
class EnvelopeFunction:
    """A non-decreasing envelope sampled on ``nodes``.

    ``segments`` holds the exact piecewise-affine form when available
    (``exact=True``); otherwise evaluation interpolates the samples.
    """

    nodes: np.ndarray
    values: np.ndarray
    direction: str
    exact: bool
    segments: tuple[_Seg, ...] = ()
    domain: tuple[float, float] = (-math.inf, math.inf)

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = self._eval(arr, left=False)
        return float(out) if np.ndim(t) == 0 else out

    def left_limit(self, t):
        arr = np.asarray(t, dtype=float)
        out = self._eval(arr, left=True)
        return float(out) if np.ndim(t) == 0 else out

    def _eval(self, t: np.ndarray, left: bool) -> np.ndarray:
        lo, hi = self.domain
        eps = 1e-9 * max(1.0, abs(lo), abs(hi))
        if t.size and (np.min(t) < lo - eps or np.max(t) > hi + eps):
            raise EnvelopeError(f"envelope evaluated outside its domain [{lo}, {hi}]")
        return self._raw(t, left)

    def _raw(self, t, left: bool = False):
        """Evaluation without the domain check."""
        if not self.exact:
            return np.interp(t, self.nodes, self.values)
        starts = self._starts
        idx = np.searchsorted(starts, t, side="left" if left else "right") - 1
        idx = np.clip(idx, 0, len(self.segments) - 1)
        return self._b[idx] + self._a[idx] * t

    def __post_init__(self):
        if self.exact:
            object.__setattr__(self, "_starts", np.array([s.start for s in self.segments]))
            object.__setattr__(self, "_b", np.array([s.b for s in self.segments]))
            object.__setattr__(self, "_a", np.array([s.a for s in self.segments]))

    def breakpoints(self, a: float = -math.inf, b: float = math.inf) -> np.ndarray:
        pts = np.array([s.start for s in self.segments] + [s.end for s in self.segments])
        pts = np.unique(pts[np.isfinite(pts)])
        return pts[(pts >= a) & (pts <= b)]

    def resample(self, nodes: np.ndarray) -> "EnvelopeFunction":
        """Same envelope on a different grid (exact envelopes only)."""
        if not self.exact:
            raise EnvelopeError("a sampled envelope cannot be moved to another grid")
        nodes = np.asarray(nodes, dtype=float)
        return EnvelopeFunction(nodes, self(nodes), self.direction, True, self.segments, self.domain)


def uniform_nodes(a: float, b: float, h: float, extra=()) -> np.ndarray:
    n = max(int(math.ceil((b - a) / h - 1e-9)), 1)
    base = np.linspace(a, b, n + 1)
    extra = np.asarray(list(extra), dtype=float)
    extra = extra[(extra >= a) & (extra <= b)]
    return _merge_nodes(base, extra)


def _merge_nodes(base: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Union of two node sets; base nodes within rounding of a kept node are dropped."""
    keep = np.unique(keep)
    if keep.size == 0:
        return np.unique(base)
    scale = max(1.0, float(np.max(np.abs(base))) if base.size else 1.0)
    tol = 1e-9 * scale
    pos = np.searchsorted(keep, base)
    near = np.zeros(base.shape, dtype=bool)
    for off in (-1, 0):
        j = np.clip(pos + off, 0, keep.size - 1)
        near |= np.abs(keep[j] - base) <= tol
    return np.unique(np.concatenate([base[~near], keep]))


def _compress(segs: list[_Seg]) -> list[_Seg]:
    out: list[_Seg] = []
    for s in segs:
        if s.end <= s.start:
            continue
        if out and out[-1].a == s.a and out[-1].b == s.b and out[-1].end == s.start:
            out[-1] = _Seg(out[-1].start, s.end, s.b, s.a)
        else:
            out.append(s)
    return out


def _sup_segments(tau: PiecewiseCellFunction, end: float) -> list[_Seg]:
    segs: list[_Seg] = []
    M = -math.inf
    for pc in tau.pieces(tau.t0, end):
        a_, b_ = pc.start, pc.end
        f_lo, f_hi = pc.value(a_), pc.value(b_)
        if pc.a <= 0:
            M = max(M, f_lo)
            segs.append(_Seg(a_, b_, M, 0.0))
        else:
            if f_lo >= M:
                segs.append(_Seg(a_, b_, pc.b, pc.a))
            elif f_hi <= M:
                segs.append(_Seg(a_, b_, M, 0.0))
            else:
                cross = (M - pc.b) / pc.a
                segs.append(_Seg(a_, cross, M, 0.0))
                segs.append(_Seg(cross, b_, pc.b, pc.a))
            M = max(M, f_hi)
    return _compress(segs)


def _inf_segments(sigma: PiecewiseCellFunction, start: float, end: float) -> list[_Seg]:
    segs: list[_Seg] = []
    M = math.inf
    for pc in reversed(list(sigma.pieces(start, end))):
        a_, b_ = pc.start, pc.end
        f_lo, f_hi = pc.value(a_), pc.value(b_)
        if pc.a < 0:
            M = min(M, f_hi)
            segs.append(_Seg(a_, b_, M, 0.0))
        else:
            if f_hi <= M:
                segs.append(_Seg(a_, b_, pc.b, pc.a))
            elif f_lo >= M:
                segs.append(_Seg(a_, b_, M, 0.0))
            else:
                cross = (M - pc.b) / pc.a
                segs.append(_Seg(cross, b_, M, 0.0))
                segs.append(_Seg(a_, cross, pc.b, pc.a))
            M = min(M, f_lo)
    segs.reverse()
    return _compress(segs)


def _exact(nodes, segs, direction, domain) -> EnvelopeFunction:
    env = EnvelopeFunction(nodes, np.empty(0), direction, True, tuple(segs), domain)
    return replace(env, values=env(nodes))


def running_sup(tau: PiecewiseCellFunction, window, h: float = 1e-3, nodes=None) -> EnvelopeFunction:
    """Running supremum of a delay argument, accumulated from ``tau.t0``.

    Exact for affine cells; sampled on ``nodes`` (default: step ``h`` over
    the window plus breakpoints) otherwise.
    """
    a, b = float(window[0]), float(window[1])
    if not b > a:
        raise EnvelopeError("empty window")
    if tau.form == "affine":
        # sweep past b so a piece starting exactly at b still counts at t = b
        segs = _sup_segments(tau, b + (tau.period or 1.0))
        if nodes is None:
            nodes = uniform_nodes(a, b, h, [s.start for s in segs])
        nodes = np.asarray(nodes, dtype=float)
        return _exact(nodes, segs, "sup", (tau.t0, b))
    # sampled fallback: prefix max from t0 over a fine grid, then read off at nodes
    fine = uniform_nodes(tau.t0, b, h, tau.breakpoints(tau.t0, b))
    vals = np.maximum(tau(fine), tau.left_limit(fine))
    pref = np.maximum.accumulate(vals)
    if nodes is None:
        nodes = fine[fine >= a]
    nodes = np.asarray(nodes, dtype=float)
    idx = np.searchsorted(fine, nodes, side="right") - 1
    out = np.maximum(pref[np.clip(idx, 0, None)], tau(nodes))
    return EnvelopeFunction(nodes, out, "sup", False, (), (tau.t0, b))


def running_inf(
    sigma: PiecewiseCellFunction, window, h: float = 1e-3, nodes=None, advance_bound: float | None = None
) -> EnvelopeFunction:
    """Running infimum over the future of an advanced argument.

    Values on ``[a, b]`` only need ``sigma`` on ``[a, b + advance_bound]``
    since ``sigma(s) >= s``; the sweep runs backwards from there.
    """
    a, b = float(window[0]), float(window[1])
    if not b > a:
        raise EnvelopeError("empty window")
    if advance_bound is None:
        ts, vs = sigma.endpoint_samples(a, b)
        advance_bound = float(np.max(vs - ts)) if ts.size else 0.0
        if sigma.periodic:
            # one more period covers the drift-free case
            ts, vs = sigma.endpoint_samples(a, b + sigma.period)
            advance_bound = max(advance_bound, float(np.max(vs - ts)))
    if not math.isfinite(advance_bound):
        raise EnvelopeError("unbounded advance: sigma(t) - t has no finite supremum")
    end = b + max(advance_bound, 0.0) + 1e-9 * max(1.0, abs(b))
    if sigma.form == "affine":
        segs = [s for s in _inf_segments(sigma, a, end) if s.start <= b]
        if nodes is None:
            nodes = uniform_nodes(a, b, h, [s.start for s in segs])
        nodes = np.asarray(nodes, dtype=float)
        return _exact(nodes, segs, "inf", (a, b))
    fine = uniform_nodes(a, end, h, sigma.breakpoints(a, end))
    vals = np.minimum(sigma(fine), sigma.left_limit(fine))
    suff = np.minimum.accumulate(vals[::-1])[::-1]
    if nodes is None:
        nodes = fine[fine <= b]
    nodes = np.asarray(nodes, dtype=float)
    idx = np.searchsorted(fine, nodes, side="left")
    out = np.minimum(suff[np.clip(idx, 0, fine.size - 1)], sigma(nodes))
    return EnvelopeFunction(nodes, out, "inf", False, (), (a, b))


def _combine(envs, op, direction) -> EnvelopeFunction:
    envs = list(envs)
    if not envs:
        raise EnvelopeError("nothing to combine")
    nodes = envs[0].nodes
    for e in envs[1:]:
        if e.nodes.shape != nodes.shape or not np.array_equal(e.nodes, nodes):
            raise EnvelopeError("envelopes live on different grids")
    if len(envs) == 1:
        return envs[0]
    values = op.reduce([e.values for e in envs])
    lo = max(e.domain[0] for e in envs)
    hi = min(e.domain[1] for e in envs)
    if not all(e.exact for e in envs):
        return EnvelopeFunction(nodes, values, direction, False, (), (lo, hi))
    # members may carry segments past hi; keep them so evaluation at hi sees a jump there
    reach = min(e.segments[-1].end for e in envs)
    reach = hi if not math.isfinite(reach) or reach < hi else reach
    cuts = set([lo, reach])
    for e in envs:
        cuts.update(float(x) for x in e.breakpoints(lo, reach))
    cuts = sorted(cuts)
    # add pairwise crossings inside each interval so one envelope wins throughout
    fine = []
    for x0, x1 in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (x0 + x1)
        lines = []
        for e in envs:
            i = int(np.clip(np.searchsorted(e._starts, mid, "right") - 1, 0, len(e.segments) - 1))
            lines.append((float(e._b[i]), float(e._a[i])))
        pts = {x0, x1}
        for i in range(len(lines)):
            for j in range(i + 1, len(lines)):
                (b1, a1), (b2, a2) = lines[i], lines[j]
                if a1 != a2:
                    x = (b2 - b1) / (a1 - a2)
                    if x0 < x < x1:
                        pts.add(x)
        fine.extend(sorted(pts))
    fine = sorted(set(fine))
    segs = []
    for x0, x1 in zip(fine[:-1], fine[1:]):
        mid = 0.5 * (x0 + x1)
        vals = [float(e._raw(mid)) for e in envs]
        k = int(np.argmax(vals) if op is np.maximum else np.argmin(vals))
        e = envs[k]
        i = int(np.clip(np.searchsorted(e._starts, mid, "right") - 1, 0, len(e.segments) - 1))
        segs.append(_Seg(x0, x1, float(e._b[i]), float(e._a[i])))
    return EnvelopeFunction(nodes, values, direction, True, tuple(_compress(segs)), (lo, hi))


def combine_max(envelopes) -> EnvelopeFunction:
    """Pointwise maximum ``g = max_i g_i``."""
    return _combine(envelopes, np.maximum, "sup")


def combine_min(envelopes) -> EnvelopeFunction:
    """Pointwise minimum ``rho = min_i rho_i``."""
    return _combine(envelopes, np.minimum, "inf")
