import csv
import io
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dmtlab.dmt import (ZERO_CURVE, CurveError, DmtCurve, blt_lower_bound, curve_max,
                        curve_min, curve_sum, cutset_bound, extreme_points, from_samples, line,
                        parallel_allocation, parallel_dmt, parallel_identical,
                        parallel_repeated, rayleigh_mimo_dmt, scalar_rayleigh_product_dmt,
                        scale_rate, weighted_parallel)
from dmtlab.network import (chain_network, diamond_network, min_cut_edges,
                            mincut_figure_network, random_dag)

from oracles import curve_values, grid_inf_convolution, random_convex_points

curves = st.integers(0, 10 ** 6).map(
    lambda s: DmtCurve(tuple(random_convex_points(np.random.default_rng(s)))))


def pts(c):
    return [tuple(p) for p in c.breakpoints()]


# -- elementary curves -------------------------------------------------------

def test_rayleigh_mimo():
    assert rayleigh_mimo_dmt(1, 1).equals(line(1, 1))
    assert pts(rayleigh_mimo_dmt(2, 2)) == [(0, 4), (1, 1), (2, 0)]
    for n in range(1, 5):
        assert rayleigh_mimo_dmt(1, n).equals(line(n, 1))
        assert rayleigh_mimo_dmt(n, 1).equals(line(n, 1))


def test_product_curve():
    assert scalar_rayleigh_product_dmt(1).equals(line(1, 1))
    assert scalar_rayleigh_product_dmt(3).equals(line(1, 1))
    with pytest.raises(CurveError):
        scalar_rayleigh_product_dmt(0)


def test_curve_validation():
    with pytest.raises(CurveError):
        DmtCurve(((0, 1), (1, 2)))  # increasing
    with pytest.raises(CurveError):
        DmtCurve(((1, 1), (2, 0)))  # not anchored at r = 0
    c = DmtCurve(((0, 2), (1, 1), (2, 0), (3, 0)))
    assert pts(c) == [(0, 2), (2, 0)]  # collinear point and zero tail removed


def test_evaluation():
    c = line(2, F(1, 2))
    assert c(0) == 2 and c(F(1, 4)) == 1 and c(5) == 0
    assert np.allclose(c.evaluate([0, 0.25, 5]), [2, 1, 0])
    with pytest.raises(CurveError):
        c(-1)


# -- parallel channels -------------------------------------------------------

def test_parallel_examples():
    c = rayleigh_mimo_dmt(2, 2)
    assert parallel_dmt([c]) is c
    assert parallel_dmt([line(1, 1), line(1, 1)]).equals(line(2, 2))
    assert parallel_identical(c, 1).equals(c)
    for m in range(1, 6):
        assert parallel_identical(line(1, 1), m).equals(line(m, m))
    assert parallel_identical(c, 2).equals(parallel_dmt([c, c]))


def test_parallel_mixed_against_grid():
    a, b = line(1, 1), line(2, 1)
    out = parallel_dmt([a, b])
    grid, ref = grid_inf_convolution([a.points, b.points])
    assert np.max(np.abs(out.evaluate(grid) - ref)) <= 2e-3


def test_parallel_repeated():
    a, b = line(1, 1), rayleigh_mimo_dmt(2, 2)
    assert parallel_repeated([a, b], [1, 1]).equals(parallel_dmt([a, b]))
    for k in range(1, 5):
        assert parallel_repeated([line(1, 1)], [k]).equals(line(1, k))
    m, t, d = 3, 10, 2
    got = parallel_repeated([line(1, 1)] * m, [t - d] * m)
    assert got.equals(line(m, m * (t - d)))


def test_non_convex_refused_and_fallback():
    bumpy = DmtCurve(((0, 2), (1, F(3, 2)), (2, 0)))  # slopes -1/2 then -3/2
    assert not bumpy.is_convex()
    with pytest.raises(CurveError):
        parallel_dmt([bumpy, line(1, 1)])
    with pytest.raises(CurveError):
        parallel_identical(bumpy, 2)
    out = parallel_dmt([bumpy, line(1, 1)], fallback=True, step=1e-2)
    grid, ref = grid_inf_convolution([bumpy.points, line(1, 1).points], 1e-2)
    assert np.max(np.abs(out.evaluate(grid) - ref)) < 1e-9


def test_allocation_is_optimal():
    cs = [line(1, 1), line(3, F(1, 2)), rayleigh_mimo_dmt(2, 2)]
    total = parallel_dmt(cs)
    for r in [F(0), F(1, 3), F(1), F(2), F(7, 2)]:
        alloc = parallel_allocation(cs, r)
        assert sum(alloc.rates) == r
        assert sum(c(x) for c, x in zip(cs, alloc.rates)) == total(r)


def test_weighted_parallel_drops_zero_weight():
    assert weighted_parallel([line(1, 1), line(5, 1)], [1, 0]).equals(line(1, 1))
    assert weighted_parallel([line(1, 1)], [0]).equals(ZERO_CURVE)


# -- blt and rate scaling ----------------------------------------------------

def test_blt_examples():
    got = blt_lower_bound(line(1, 2), line(1, 1), True)
    assert got.equals(curve_sum(line(1, 2), line(1, 1)))
    c = rayleigh_mimo_dmt(2, 2)
    assert blt_lower_bound(c, c, False).equals(c)
    assert blt_lower_bound(c, ZERO_CURVE, True).equals(c)
    assert blt_lower_bound(c, ZERO_CURVE, False).equals(c)


def test_scale_rate_examples():
    c = rayleigh_mimo_dmt(2, 3)
    assert scale_rate(c, 4, 4).equals(c)
    naf = scale_rate(curve_sum(line(1, 2), line(1, 1)), 2, 1)
    assert pts(naf) == [(0, 2), (F(1, 2), F(1, 2)), (1, 0)]
    assert naf.equals(curve_sum(line(1, 1), line(1, F(1, 2))))
    m, t, d = 2, 7, 2
    h0 = parallel_repeated([line(1, 1)] * m, [t - d] * m)
    assert scale_rate(h0, m * t).equals(line(m, F(t - d, t)))
    with pytest.raises(CurveError):
        scale_rate(c, 1, 2)


def test_max_min_crossing():
    a, b = line(2, 1), line(1, 2)  # cross at r = 2/3
    hi, lo = curve_max(a, b), curve_min(a, b)
    assert hi(F(2, 3)) == lo(F(2, 3)) == F(2, 3)
    for r in np.linspace(0, 2, 41):
        assert hi(F(r).limit_denominator(1000)) == max(a(F(r).limit_denominator(1000)),
                                                       b(F(r).limit_denominator(1000)))


def test_from_samples():
    c = from_samples([0, 0.5, 1.0], [2, 1, 0])
    assert c.equals(line(2, 1))
    extended = from_samples([0, 0.5], [2, 1])
    assert extended.equals(line(2, 1))


# -- serialization -----------------------------------------------------------

def test_json_round_trip_exact():
    c = curve_sum(line(1, 1), line(2, F(4, 5)))
    data = c.to_json()
    assert data["exact"][1] == ["4/5", "1/5"]
    assert DmtCurve.from_json(data).points == c.points


def test_csv_export_grid():
    c = line(2, F(1, 3))
    text = c.to_csv(step=0.1, header="seed=42")
    lines = text.splitlines()
    assert lines[0] == "# seed=42" and lines[1] == "r,d"
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))[1:]
    rs = [float(a) for a, _ in rows]
    assert any(abs(x - 1 / 3) < 1e-12 for x in rs)  # breakpoint included
    assert rs == sorted(rs) and rs[-1] == pytest.approx(1 / 3)
    for a, b in rows:
        assert float(b) == pytest.approx(max(0.0, 2 - 6 * float(a)), abs=1e-11)


# -- network extreme points --------------------------------------------------

def test_extreme_points_examples():
    ep = extreme_points(chain_network(1))
    assert (ep.d_max, ep.r_max) == (1, 1)
    ep = extreme_points(mincut_figure_network())
    assert (ep.d_max, ep.r_max) == (12, 2)
    assert not ep.r_max_upper_bound_only
    ep = extreme_points(diamond_network())
    assert (ep.d_max, ep.r_max) == (2, 1)
    assert extreme_points(diamond_network(duplex="half")).r_max_upper_bound_only


def test_cutset_bound_full_blocks():
    cb = cutset_bound(chain_network(1))
    assert cb.complete and cb.curve.equals(line(1, 1))
    # the mixed cuts {S, R1} and {S, R2} are block diagonal, so only the
    # two full cuts (6x2 and 2x6 Rayleigh blocks) contribute to the curve
    cb = cutset_bound(mincut_figure_network())
    assert not cb.complete
    assert pts(cb.curve) == [(0, 12), (1, 5), (2, 0)]


# -- properties ---------------------------------------------------------------

@given(st.lists(curves, min_size=1, max_size=3))
def test_parallel_properties(cs):
    out = parallel_dmt(cs)
    assert out.is_convex()
    assert all(s <= 0 for s in out.slopes())
    assert out.d0 == sum(c.d0 for c in cs)
    assert out.r_max == sum(c.r_max for c in cs)
    m = len(cs)
    for r in np.linspace(0, float(out.r_max), 25):
        r = F(r).limit_denominator(10 ** 6)
        assert sum(c(r) for c in cs) <= out(r) <= sum(c(r / m) for c in cs)


@given(st.lists(curves, min_size=1, max_size=3), st.integers(0, 10 ** 6))
def test_parallel_matches_grid_oracle(cs, seed):
    out = parallel_dmt(cs)
    grid, ref = grid_inf_convolution([c.points for c in cs], 1e-3)
    rs = np.sort(np.random.default_rng(seed).choice(len(grid), 50))
    assert np.max(np.abs(out.evaluate(grid[rs]) - ref[rs])) <= 2e-3


@given(curves, curves)
def test_blt_sum_exact(a, b):
    out = blt_lower_bound(a, b, True)
    for r in {p[0] for p in a.points} | {p[0] for p in b.points} | {F(1, 7)}:
        assert out(r) - a(r) - b(r) == 0


@given(curves, st.integers(1, 6), st.integers(1, 6))
def test_scale_rate_properties(c, data, extra):
    slots = data + extra
    out = scale_rate(c, slots, data)
    assert out.d0 == c.d0
    assert out.r_max == c.r_max * F(data, slots)


@given(curves, curves)
def test_envelopes_pointwise(a, b):
    hi, lo = curve_max(a, b), curve_min(a, b)
    grid = np.linspace(0, float(max(a.r_max, b.r_max)), 40)
    assert np.allclose(hi.evaluate(grid), np.maximum(a.evaluate(grid), b.evaluate(grid)))
    assert np.allclose(lo.evaluate(grid), np.minimum(a.evaluate(grid), b.evaluate(grid)))


@given(st.integers(0, 10 ** 6))
def test_extreme_points_definitions(seed):
    net = random_dag(np.random.default_rng(seed), 6, 2, 0.6)
    ep = extreme_points(net)
    assert ep.d_max == min_cut_edges(net)
    assert ep.r_max <= ep.d_max


@given(curves)
def test_curve_values_helper_agrees(c):
    grid = np.linspace(0, float(c.r_max) + 0.5, 30)
    assert np.allclose(c.evaluate(grid), curve_values(c.points, grid))
