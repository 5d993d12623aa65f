"""Piecewise-linear diversity-multiplexing tradeoff curves and their calculus.

A curve is stored by its breakpoints ``(r, d)`` starting at ``r = 0`` and
ending at ``(r_max, 0)``; it is linearly interpolated in between and zero
beyond ``r_max``.  Arithmetic stays in exact rationals whenever the inputs
are ints or Fractions.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np

FLOAT_TOL = 1e-9


def _q(x):
    """Promote ints to Fraction; leave floats alone."""
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, (np.integer,)):
        return Fraction(int(x))
    return float(x)


def _div(a, b):
    if isinstance(a, Rational) and isinstance(b, Rational):
        return Fraction(a) / Fraction(b)
    return float(a) / float(b)


def _exact(*xs) -> bool:
    return all(isinstance(x, Rational) for x in xs)


def _close(a, b, tol=FLOAT_TOL) -> bool:
    if _exact(a, b):
        return a == b
    return abs(float(a) - float(b)) <= tol * max(1.0, abs(float(a)), abs(float(b)))


def _simplify(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return x


class CurveError(ValueError):
    pass


@dataclass(frozen=True)
class DmtCurve:
    points: tuple[tuple, ...]

    def __post_init__(self):
        pts = [(_q(r), _q(d)) for r, d in self.points]
        if not pts:
            raise CurveError("a curve needs at least one breakpoint")
        if pts[0][0] != 0:
            raise CurveError("first breakpoint must be at r = 0")
        for (r0, d0), (r1, d1) in zip(pts, pts[1:]):
            if not r1 > r0:
                raise CurveError("breakpoint r values must be strictly increasing")
            if d1 > d0 and not _close(d0, d1):
                raise CurveError("diversity must be nonincreasing")
        if any(d < 0 and not _close(d, 0) for _, d in pts):
            raise CurveError("diversity must be nonnegative")
        if not _close(pts[-1][1], 0):
            raise CurveError("last breakpoint must have d = 0")
        pts[-1] = (pts[-1][0], 0 if _exact(pts[-1][1]) else 0.0)
        object.__setattr__(self, "points", _canonical(pts))

    # evaluation ------------------------------------------------------------
    @property
    def r_max(self):
        return self.points[-1][0]

    @property
    def d0(self):
        return self.points[0][1]

    def __call__(self, r):
        r = _q(r)
        if r < 0:
            raise CurveError("negative multiplexing gain")
        pts = self.points
        if r >= pts[-1][0]:
            return 0 if _exact(r) else 0.0
        for (r0, d0), (r1, d1) in zip(pts, pts[1:]):
            if r <= r1:
                return d0 + _div((d1 - d0) * (r - r0), r1 - r0)
        return 0  # pragma: no cover

    def evaluate(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        xs = np.array([float(p[0]) for p in self.points])
        ys = np.array([float(p[1]) for p in self.points])
        if len(xs) == 1:
            return np.zeros_like(r)
        return np.interp(r, xs, ys, right=0.0)

    def slopes(self) -> list:
        return [_div(d1 - d0, r1 - r0) for (r0, d0), (r1, d1) in zip(self.points, self.points[1:])]

    def is_convex(self, tol: float = FLOAT_TOL) -> bool:
        s = self.slopes()
        return all(b >= a or _close(a, b, tol) for a, b in zip(s, s[1:]))

    def is_exact(self) -> bool:
        return all(_exact(r, d) for r, d in self.points)

    def equals(self, other: "DmtCurve", tol: float = FLOAT_TOL) -> bool:
        if len(self.points) != len(other.points):
            return False
        return all(_close(a, c, tol) and _close(b, d, tol)
                   for (a, b), (c, d) in zip(self.points, other.points))

    def breakpoints(self) -> list[tuple]:
        return [(_simplify(r), _simplify(d)) for r, d in self.points]

    # export ------------------------------------------------------------------
    def export_grid(self, step: float = 0.01) -> np.ndarray:
        """Union of breakpoints and a uniform grid on ``[0, r_max]``."""
        rmax = float(self.r_max)
        grid = np.arange(0.0, rmax + step / 2, step) if rmax > 0 else np.array([0.0])
        grid = np.concatenate([grid[grid <= rmax], [float(p[0]) for p in self.points]])
        return np.unique(np.round(grid, 12))

    def to_csv(self, step: float = 0.01, header: str | None = None) -> str:
        lines = [] if header is None else [f"# {header}"]
        lines.append("r,d")
        r = self.export_grid(step)
        for x, y in zip(r, self.evaluate(r)):
            lines.append(f"{x:.12g},{y:.12g}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        out = {"breakpoints": [[float(r), float(d)] for r, d in self.points],
               "r_max": float(self.r_max)}
        if self.is_exact():
            out["exact"] = [[str(_simplify(r)), str(_simplify(d))] for r, d in self.points]
        return out

    @classmethod
    def from_json(cls, data) -> "DmtCurve":
        if isinstance(data, dict):
            pts = data.get("exact") or data["breakpoints"]
        else:
            pts = data
        return cls(tuple((_parse_num(r), _parse_num(d)) for r, d in pts))

    def __repr__(self):
        body = ", ".join(f"({_simplify(r)}, {_simplify(d)})" for r, d in self.points)
        return f"DmtCurve([{body}])"


def _parse_num(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float) and x.is_integer():
        return int(x)
    return x


def _canonical(pts: list[tuple]) -> tuple[tuple, ...]:
    """Drop collinear interior points and any flat zero tail."""
    while len(pts) > 1 and _close(pts[-2][1], 0):
        pts.pop()
    out = [pts[0]]
    for p in pts[1:]:
        if len(out) >= 2:
            (r0, d0), (r1, d1) = out[-2], out[-1]
            lhs = (d1 - d0) * (p[0] - r1)
            rhs = (p[1] - d1) * (r1 - r0)
            if _close(lhs, rhs):
                out[-1] = p
                continue
        out.append(p)
    return tuple(out)


def line(d0, r_max) -> DmtCurve:
    """``d0 * (1 - r / r_max)^+``."""
    return DmtCurve(((0, d0), (r_max, 0)))


ZERO_CURVE = DmtCurve(((0, 0),))


def from_samples(r: Sequence[float], d: Sequence[float]) -> DmtCurve:
    """Curve through sampled values, forced nonincreasing and terminated at zero."""
    r = [float(x) for x in r]
    d = list(np.minimum.accumulate(np.maximum(np.asarray(d, float), 0.0)))
    if not r or r[0] != 0:
        raise CurveError("samples must start at r = 0")
    pts = []
    for x, y in zip(r, d):
        pts.append((x, float(y)))
        if y <= 0:
            break
    if pts[-1][1] > 0:
        # extrapolate the last segment to the axis
        (x0, y0), (x1, y1) = pts[-2], pts[-1]
        slope = (y1 - y0) / (x1 - x0) if x1 > x0 else -1.0
        if slope >= 0:
            raise CurveError("samples do not reach zero diversity")
        pts.append((x1 - y1 / slope, 0.0))
    return DmtCurve(tuple(pts))


# ---------------------------------------------------------------------------
# elementary curves

def rayleigh_mimo_dmt(m: int, n: int) -> DmtCurve:
    """i.i.d. Rayleigh ``n x m`` point-to-point channel: through ``(k, (m-k)(n-k))``."""
    if m < 1 or n < 1:
        raise CurveError("antenna counts must be positive")
    return DmtCurve(tuple((k, (m - k) * (n - k)) for k in range(min(m, n) + 1)))


def scalar_rayleigh_product_dmt(n_hops: int) -> DmtCurve:
    """Product of ``n_hops`` independent scalar Rayleigh gains: ``(1 - r)^+``."""
    if n_hops < 1:
        raise CurveError("need at least one hop")
    return line(1, 1)


# ---------------------------------------------------------------------------
# pointwise combinations

def _breaks(*curves: DmtCurve) -> list:
    rs = sorted({r for c in curves for r, _ in c.points})
    return rs


def curve_sum(*curves: DmtCurve) -> DmtCurve:
    rs = _breaks(*curves)
    return DmtCurve(tuple((r, sum(c(r) for c in curves)) for r in rs))


def _envelope(a: DmtCurve, b: DmtCurve, pick) -> DmtCurve:
    rs = _breaks(a, b)
    pts = []
    for r0, r1 in zip(rs, rs[1:]):
        pts.append((r0, pick(a(r0), b(r0))))
        da0, db0, da1, db1 = a(r0), b(r0), a(r1), b(r1)
        g0, g1 = da0 - db0, da1 - db1
        if (g0 > 0 and g1 < 0) or (g0 < 0 and g1 > 0):
            t = _div(g0, g0 - g1)
            rc = r0 + t * (r1 - r0)
            pts.append((rc, a(rc)))
    pts.append((rs[-1], pick(a(rs[-1]), b(rs[-1]))))
    return DmtCurve(tuple(pts))


def curve_max(a: DmtCurve, *rest: DmtCurve) -> DmtCurve:
    out = a
    for b in rest:
        out = _envelope(out, b, max)
    return out


def curve_min(a: DmtCurve, *rest: DmtCurve) -> DmtCurve:
    out = a
    for b in rest:
        out = _envelope(out, b, min)
    return out


def scale_diversity(curve: DmtCurve, factor) -> DmtCurve:
    if factor == 0:
        return ZERO_CURVE
    return DmtCurve(tuple((r, d * _q(factor)) for r, d in curve.points))


def stretch_rate(curve: DmtCurve, factor) -> DmtCurve:
    """``r -> curve(r / factor)``: breakpoint r values multiplied by ``factor``."""
    factor = _q(factor)
    if not factor > 0:
        raise CurveError("stretch factor must be positive")
    return DmtCurve(tuple((r * factor, d) for r, d in curve.points))


def scale_rate(curve: DmtCurve, slots: int, data_slots: int = 1) -> DmtCurve:
    """Rate loss of a protocol: ``r -> curve((slots / data_slots) * r)``."""
    if not slots >= data_slots >= 1:
        raise CurveError("need slots >= data_slots >= 1")
    return stretch_rate(curve, _div(data_slots, slots))


# ---------------------------------------------------------------------------
# parallel channels

@dataclass(frozen=True)
class RateAllocation:
    rates: tuple
    weights: tuple
    total: object


def _segments(curves: Sequence[DmtCurve]):
    segs = []
    for i, c in enumerate(curves):
        for k, ((r0, d0), (r1, d1)) in enumerate(zip(c.points, c.points[1:])):
            segs.append((_div(d1 - d0, r1 - r0), i, k, r1 - r0, d1 - d0))
    # steepest descent first; ties broken by curve then segment order
    segs.sort(key=lambda s: (float(s[0]), s[1], s[2]))
    return segs


def parallel_dmt(curves: Sequence[DmtCurve], fallback: bool = False,
                 step: float = 1e-3) -> DmtCurve:
    """Infimal convolution ``inf_{sum r_i = r} sum d_i(r_i)``.

    Exact for convex inputs (segments merged steepest first).  Non-convex
    inputs need ``fallback=True`` and are handled by a min-plus convolution on
    a grid of spacing ``step``.
    """
    curves = list(curves)
    if not curves:
        raise CurveError("no curves")
    if len(curves) == 1:
        return curves[0]
    if not all(c.is_convex() for c in curves):
        if not fallback:
            raise CurveError("non-convex input: exact inf-convolution needs convex curves")
        return _grid_inf_convolution(curves, step)
    d = sum((c.d0 for c in curves), start=0)
    r = 0
    pts = [(r, d)]
    for _, _, _, dr, dd in _segments(curves):
        r, d = r + dr, d + dd
        pts.append((r, d))
    return DmtCurve(tuple(pts))


def parallel_allocation(curves: Sequence[DmtCurve], r) -> RateAllocation:
    """One minimising allocation for convex curves (not claimed unique)."""
    curves = list(curves)
    if not all(c.is_convex() for c in curves):
        raise CurveError("allocation is only provided for convex curves")
    r = _q(r)
    rates = [0] * len(curves)
    left = r
    for _, i, _, dr, _ in _segments(curves):
        if left <= 0:
            break
        take = dr if dr <= left else left
        rates[i] += take
        left -= take
    if left > 0:
        # every curve is exhausted; dump the remainder on the first
        rates[0] += left
    return RateAllocation(tuple(rates), tuple([1] * len(curves)), r)


def _grid_inf_convolution(curves: Sequence[DmtCurve], step: float) -> DmtCurve:
    total = sum(float(c.r_max) for c in curves)
    n = int(round(total / step)) + 1
    grid = np.arange(n) * step
    acc = curves[0].evaluate(grid)
    for c in curves[1:]:
        nxt = c.evaluate(grid)
        conv = np.full(n, np.inf)
        for k in range(n):
            conv[k] = np.min(acc[: k + 1] + nxt[k::-1])
        acc = conv
    return from_samples(grid, acc)


def parallel_identical(curve: DmtCurve, copies: int) -> DmtCurve:
    """``M * d(r / M)`` for ``M`` independent copies of a convex curve."""
    if copies < 1:
        raise CurveError("need at least one copy")
    if not curve.is_convex():
        raise CurveError("equal split is optimal only for convex curves")
    return DmtCurve(tuple((r * copies, d * copies) for r, d in curve.points))


def parallel_repeated(curves: Sequence[DmtCurve], multiplicities: Sequence[int],
                      fallback: bool = False) -> DmtCurve:
    """``inf_{sum n_i r_i = r} sum d_i(r_i)`` for coefficients repeated ``n_i`` times."""
    if len(curves) != len(multiplicities):
        raise CurveError("curves and multiplicities differ in length")
    if any(n < 1 for n in multiplicities):
        raise CurveError("multiplicities must be >= 1")
    return parallel_dmt([stretch_rate(c, n) for c, n in zip(curves, multiplicities)],
                        fallback=fallback)


def weighted_parallel(curves: Sequence[DmtCurve], weights: Sequence) -> DmtCurve:
    """``inf_{sum w_i r_i = r} sum d_i(r_i)``; zero-weight channels contribute nothing."""
    kept = [stretch_rate(c, w) for c, w in zip(curves, weights) if w != 0]
    if not kept:
        return ZERO_CURVE
    return parallel_dmt(kept)


# ---------------------------------------------------------------------------
# block-lower-triangular bound

def blt_lower_bound(d_diag: DmtCurve, d_subdiag: DmtCurve, independent: bool) -> DmtCurve:
    """Sum of the diagonal and last-subdiagonal curves if independent, else their max."""
    if independent:
        return curve_sum(d_diag, d_subdiag)
    return curve_max(d_diag, d_subdiag)


# ---------------------------------------------------------------------------
# network extreme points

@dataclass(frozen=True)
class ExtremePoints:
    d_max: int
    r_max: int
    r_max_upper_bound_only: bool
    cut_ranks: tuple[tuple[frozenset, int], ...]

    def curve(self) -> DmtCurve | None:
        """Straight line between the two extreme points (achievable for some networks)."""
        if self.d_max == 0 or self.r_max == 0:
            return None
        return line(self.d_max, self.r_max)


def extreme_points(net, source: str | None = None, sink: str | None = None,
                   seed: int = 42) -> ExtremePoints:
    from .detlift import mmg
    from .network import min_cut_edges

    d_max = min_cut_edges(net, source, sink)
    res = mmg(net, source=source, sinks=None if sink is None else [sink], seed=seed)
    return ExtremePoints(d_max, res.value, not net.is_full_duplex(),
                         tuple((c.source_side, r) for c, r in res.per_cut))


@dataclass(frozen=True)
class CutsetBound:
    d_max: int
    r_max: int
    curve: DmtCurve | None
    complete: bool  # every cut is a full i.i.d. Rayleigh block


def cutset_bound(net, source: str | None = None, sink: str | None = None,
                 seed: int = 42) -> CutsetBound:
    """Cut-set DMT upper bound; a curve is given only over full-block cuts."""
    from .network import cut_transfer_pattern, enumerate_cuts

    ext = extreme_points(net, source, sink, seed)
    curves, complete = [], True
    for cut in enumerate_cuts(net, source, sink):
        pat = cut_transfer_pattern(net, cut)
        if pat.rows and pat.cols and len(pat.entries) == pat.rows * pat.cols:
            curves.append(rayleigh_mimo_dmt(pat.cols, pat.rows))
        elif pat.rows == 0:
            curves.append(ZERO_CURVE)
        else:
            complete = False
    curve = curve_min(*curves) if curves else None
    return CutsetBound(ext.d_max, ext.r_max, curve, complete)


def dump_curves(curves: dict[str, DmtCurve]) -> str:
    return json.dumps({k: v.to_json() for k, v in curves.items()}, indent=2, sort_keys=True)


def all_compositions(total: int, parts: int):
    """Integer vectors of length ``parts`` with nonnegative entries summing to ``total``."""
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, out = -1, []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield out
