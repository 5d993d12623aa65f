import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dmtlab.montecarlo import (R_ZERO, ImportanceSampling, check_sigma_bounds,
                               eigen_bound_check, estimate_diversity, fit_slope,
                               mutual_information, outage_points, outage_probability,
                               small_ball_check, tail_bound_check, whiteness_check)
from dmtlab.network import chain_network, diamond_network
from dmtlab.poly import Poly, PolyMatrix, rayleigh_block
from dmtlab.protocols import (InducedChannel, Schedule, build_induced_channel,
                              edge_disjoint_protocol, naf_single)

from oracles import scalar_outage_exact

LADDER = (10, 15, 20, 25, 30, 35)

# Frozen oracle values (computed once by numerical quadrature and closed forms).
# P{log2(1 + 100 |h|^2) < 0.5 log2 100}
SCALAR_R05_RHO100 = 0.08606881472877181
# Two independent Rayleigh branches, one slot, r = 0.05, on the ladder
PARALLEL_R005 = [7.10183803e-05, 1.66803575e-05, 3.09015586e-06, 5.02632465e-07,
                 7.53161263e-08, 1.06665677e-08]
PARALLEL_R005_SLOPE = 1.5395092762
# Edge-disjoint protocol on the diamond, white noise, r = 0.1, on the ladder
DIAMOND_R01 = [0.0515019215851, 0.0238651557558, 0.00888721153764, 0.0028452098695,
               0.000814513611815, 0.000214150748592]
DIAMOND_R01_SLOPE = 0.960043895608164
# Single-relay NAF channel without noise whitening, r = 0.05, on the ladder
NAF_COLORED_R005 = [0.000646456486672, 0.0001872792084, 4.30020615457e-5, 8.5999016191e-6,
                    1.56707036297e-6, 2.66988207331e-7]
NAF_COLORED_R005_SLOPE = 1.3629391479056
# P{|h1 h2|^2 > k} = 2 sqrt(k) K1(2 sqrt(k))
PRODUCT_TAIL = {1: 0.27973176, 4: 0.04993400, 25: 1.8648773e-4, 100: 1.1766116e-8}


def scalar_channel():
    return build_induced_channel(chain_network(1), Schedule(({0},)))


def parallel_channel():
    return InducedChannel(PolyMatrix.from_rows([["a", 0], [0, "b"]]), (), 1, 1)


def test_scalar_outage_matches_closed_form():
    assert scalar_outage_exact(0.5, 100.0) == pytest.approx(SCALAR_R05_RHO100, rel=1e-12)
    pt = outage_probability(scalar_channel(), 0.5, 100.0, trials=1_000_000, seed=1)
    assert abs(pt.p - SCALAR_R05_RHO100) < 4 * pt.stderr
    assert pt.trials == 1_000_000 and pt.events == round(pt.p * pt.trials)


def test_r_zero_boundary():
    pt = outage_probability(scalar_channel(), 0.0, 1000.0, trials=20_000)
    assert pt.p == 0.0
    est = estimate_diversity(scalar_channel(), 0.0, trials=20_000)
    assert est.r == R_ZERO


def test_mutual_information_per_block():
    ic = parallel_channel()
    mi = mutual_information(ic, {"a": np.array([1.0]), "b": np.array([2.0])}, 10.0)
    assert mi[0] == pytest.approx(math.log2(11) + math.log2(41))


def test_whitened_information_is_smaller():
    ic, _ = naf_single()
    rng = np.random.default_rng(0)
    vals = {v: rng.normal(size=100) + 1j * rng.normal(size=100) for v in ic.variables()}
    white = mutual_information(ic, vals, 100.0, whiten=True)
    plain = mutual_information(ic, vals, 100.0, whiten=False)
    assert np.all(white <= plain + 1e-12)


def test_determinism_and_worker_independence(monkeypatch):
    ic, _ = naf_single()
    kw = dict(r=0.5, rho_db_list=(10, 20, 30), trials=120_000, seed=9)
    monkeypatch.setenv("DMTLAB_THREADS", "1")
    a = estimate_diversity(ic, **kw)
    monkeypatch.setenv("DMTLAB_THREADS", "4")
    b = estimate_diversity(ic, **kw)
    c = estimate_diversity(ic, **kw)
    assert a == b == c
    assert a.to_csv() == b.to_csv()
    d = estimate_diversity(ic, **{**kw, "seed": 10})
    assert d.p_out != a.p_out


def test_monotonicity():
    ic, _ = naf_single()
    rhos = [10.0, 100.0, 1000.0]
    lo = outage_points(ic, 0.3, rhos, trials=200_000, seed=2)
    hi = outage_points(ic, 0.6, rhos, trials=200_000, seed=2)
    for a, b in zip(lo, lo[1:]):
        assert b.p <= a.p + 3 * math.hypot(a.stderr, b.stderr)
    for a, b in zip(lo, hi):
        assert a.p <= b.p + 3 * math.hypot(a.stderr, b.stderr)


def test_scalar_slope():
    est = estimate_diversity(scalar_channel(), 0.2, LADDER, trials=1_000_000, seed=42)
    # finite-SNR slope is 0.666 on this ladder, below the asymptotic 1 - r
    assert 0.65 <= est.slope <= 0.95
    exact = [scalar_outage_exact(0.2, 10 ** (v / 10)) for v in LADDER]
    ref = -np.polyfit(np.log([10 ** (v / 10) for v in LADDER]), np.log(exact), 1)[0]
    assert abs(est.slope - ref) < 3 * est.ci + 1e-3
    # the residual check sees the bend of the exact curve at this precision
    assert not est.curvature_ok()


def test_scalar_slope_high_ladder():
    est = estimate_diversity(scalar_channel(), 0.2, (30, 35, 40, 45, 50), trials=1_000_000,
                             seed=42)
    assert est.slope == pytest.approx(0.8, abs=0.1)
    assert est.curvature_ok()


def test_parallel_importance_sampling_matches_quadrature():
    est = estimate_diversity(parallel_channel(), 0.0, LADDER, trials=300_000, seed=4,
                             importance=ImportanceSampling(1.0))
    for p, se, ref in zip(est.p_out, est.stderr, PARALLEL_R005):
        assert abs(p - ref) < 4 * se
    assert abs(est.slope - PARALLEL_R005_SLOPE) < 3 * est.ci
    assert est.importance_beta == 1.0


def test_parallel_finite_snr_slope_oracle():
    # the exact local slope creeps toward 2 only far above the ladder
    from scipy import integrate

    def outage(rho, r=R_ZERO):
        t = rho ** r
        f = lambda a: (-math.expm1(-((t / (1 + rho * a)) - 1) / rho)) * math.exp(-a)
        return integrate.quad(f, 0, (t - 1) / rho, epsrel=1e-12)[0]

    slopes = []
    for db in (35, 80, 200):
        a, b = 10 ** (db / 10), 10 ** ((db + 5) / 10)
        slopes.append(-(math.log(outage(b)) - math.log(outage(a))) / math.log(b / a))
    assert slopes == sorted(slopes) and slopes[-1] > 1.9


def test_edge_disjoint_diamond_slope():
    ic = edge_disjoint_protocol(diamond_network()).channel
    est = estimate_diversity(ic, 0.1, LADDER, trials=400_000, seed=6, whiten=False)
    for p, se, ref in zip(est.p_out, est.stderr, DIAMOND_R01):
        assert abs(p - ref) < 4 * se
    assert abs(est.slope - DIAMOND_R01_SLOPE) < 3 * est.ci + 1e-3


def test_naf_importance_sampling_matches_quadrature():
    ic, _ = naf_single()
    est = estimate_diversity(ic, 0.05, LADDER, trials=300_000, seed=8, whiten=False,
                             importance=ImportanceSampling(1.0))
    for p, se, ref in zip(est.p_out, est.stderr, NAF_COLORED_R005):
        assert abs(p - ref) < 4 * se
    assert abs(est.slope - NAF_COLORED_R005_SLOPE) < 3 * est.ci


def test_whiteness_naf_high_rate():
    ic, _ = naf_single()
    rep = whiteness_check(ic, 0.5, (20, 25, 30, 35), trials=300_000, seed=11)
    assert rep.agree
    assert rep.white.whiten and not rep.colored.whiten


def test_fit_slope_synthetic():
    x = np.log(10 ** (np.arange(10, 40, 5) / 10))
    p = 3.0 * np.exp(-1.7 * x)
    fit = fit_slope(x, p, 0.01 * p, [1000] * 6)
    assert fit.slope == pytest.approx(1.7)
    assert fit.ci > 0
    fit = fit_slope(x, p, 0.01 * p, [1000, 1000, 10, 10, 10, 10])
    assert math.isnan(fit.slope) is False and sum(fit.used) == 2
    fit = fit_slope(x, p, 0.01 * p, [1000, 10, 10, 10, 10, 10])
    assert math.isnan(fit.slope)


def test_outputs_carry_seed():
    est = estimate_diversity(scalar_channel(), 0.5, (10, 20, 30), trials=10_000, seed=123)
    assert est.to_csv().startswith("# seed=123")
    assert est.to_json()["seed"] == 123
    assert est.to_csv().splitlines()[1] == "rho_db,p_out,stderr,events"


# -- small ball and tails -------------------------------------------------------

def test_small_ball_scalar():
    rep = small_ball_check(Poly.var("h"), [1e-1, 1e-2, 1e-3], trials=2_000_000, seed=1)
    for d, p, se in zip(rep.thresholds, rep.probs, rep.stderr):
        assert abs(p - (-math.expm1(-d))) < 4 * se
    assert rep.slope == pytest.approx(1.0, abs=0.05)


def test_small_ball_2x2():
    det = rayleigh_block(2, 2, "h").det()
    rep = small_ball_check(det, [1e-1, 1e-2, 1e-3, 1e-4], trials=10_000_000, seed=2)
    assert rep.slope > 0.4


def test_small_ball_rank_deficient():
    a, b, c, d = (Poly.var(x) for x in "abcd")
    det = PolyMatrix(2, 2, {(0, 0): a * b, (0, 1): a * c, (1, 0): d * b,
                            (1, 1): d * c}).det()
    rep = small_ball_check(det, [1e-1, 1e-3], trials=1000)
    assert rep.flag == "rank-deficient" and rep.probs == (1.0, 1.0)


def test_tail_scalar():
    rep = tail_bound_check(Poly.var("h"), [1, 2, 4, 8], trials=2_000_000, seed=3)
    for k, p, se in zip(rep.thresholds, rep.probs, rep.stderr):
        assert abs(p - math.exp(-k)) < 4 * se


def test_tail_product_faster_than_power():
    rep = tail_bound_check(Poly.product(["h1", "h2"]), [1, 4, 25], trials=4_000_000, seed=4)
    for k, p, se in zip(rep.thresholds, rep.probs, rep.stderr):
        assert abs(p - PRODUCT_TAIL[k]) < 4 * se
    # local power-law exponent keeps steepening: no fixed power of k bounds the decay
    ks = [1, 4, 25, 100]
    exps = [-(math.log(PRODUCT_TAIL[b]) - math.log(PRODUCT_TAIL[a])) / math.log(b / a)
            for a, b in zip(ks, ks[1:])]
    assert exps == sorted(exps)
    assert 0.3 < rep.slope < 0.8  # stretch exponent near 1/2


def test_tail_zero_and_constant():
    rep = tail_bound_check(Poly.zero(), [1, 10], trials=1000)
    assert rep.probs == (0.0, 0.0) and rep.flag == "zero"
    with pytest.raises(ValueError):
        tail_bound_check(Poly.var("h") + 1, [1])


# -- covariance bounds -----------------------------------------------------------

def test_eigen_bounds_no_relay():
    rep = eigen_bound_check(scalar_channel(), trials=50)
    assert rep.passed and rep.min_lambda == pytest.approx(1.0)


def test_eigen_bounds_naf():
    ic, _ = naf_single()
    assert eigen_bound_check(ic, trials=1000).passed


def test_eigen_bounds_negative_fixture():
    bad = np.diag([0.5, 3.0])  # lambda_min below 1 and lambda_max above 1 + 1
    rep = check_sigma_bounds(bad, 1.0)
    assert not rep.passed and rep.failures == 1


@settings(max_examples=30)
@given(st.integers(0, 10 ** 6))
def test_eigen_bounds_random_relay_noise(seed):
    ic, _ = naf_single()
    assert eigen_bound_check(ic, trials=50, seed=seed).passed
