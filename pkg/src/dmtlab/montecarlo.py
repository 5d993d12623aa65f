"""Outage simulation, diversity-slope fitting and small-ball / tail checks.

Randomness is split into fixed-size chunks; chunk ``c`` draws from
``SeedSequence(seed, spawn_key=(c,))`` and partial sums are combined in chunk
order, so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .poly import Poly, PolyMatrix
from .protocols import InducedChannel, blt_parts, noise_covariance

CHUNK = 50_000
MIN_EVENTS = 50
DEFAULT_LADDER_DB = (10, 15, 20, 25, 30, 35)
R_ZERO = 0.05  # r = 0 is simulated at this value
Z95 = 1.959963984540054


def worker_count() -> int:
    env = os.environ.get("DMTLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def _chunks(trials: int, chunk: int = CHUNK) -> list[int]:
    sizes = [chunk] * (trials // chunk)
    if trials % chunk:
        sizes.append(trials % chunk)
    return sizes


def _run_chunks(fn: Callable[[np.random.Generator, int], object], trials: int, seed: int,
                chunk: int = CHUNK) -> list:
    sizes = _chunks(trials, chunk)
    rngs = [np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(c,)))
            for c in range(len(sizes))]
    workers = min(worker_count(), len(sizes)) or 1
    if workers == 1:
        return [fn(g, n) for g, n in zip(rngs, sizes)]
    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(fn, rngs, sizes))


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


@dataclass(frozen=True)
class FadingAssignment:
    values: dict[str, np.ndarray]

    @classmethod
    def sample(cls, names: Sequence[str], n: int, rng: np.random.Generator) -> "FadingAssignment":
        draws = complex_gaussian(rng, (len(names), n))
        return cls({v: draws[i] for i, v in enumerate(names)})


# ---------------------------------------------------------------------------
# mutual information and outage

def log2det_psd(a: np.ndarray) -> np.ndarray:
    sign, logdet = np.linalg.slogdet(a)
    return logdet / math.log(2.0)


def mutual_information(ic: InducedChannel, values: Mapping[str, np.ndarray], rho: float,
                       whiten: bool = True) -> np.ndarray:
    """Gaussian-input mutual information in bits per block (not per channel use)."""
    h = ic.signal.evaluate(values)
    if h.ndim == 2:
        h = h[None]
    n = h.shape[-2]
    hh = h @ np.conj(np.swapaxes(h, -1, -2))
    if whiten and ic.noise_transfers:
        sigma = noise_covariance(ic, values)
        if sigma.ndim == 2:
            sigma = sigma[None]
        return log2det_psd(sigma + rho * hh) - log2det_psd(sigma)
    return log2det_psd(np.eye(n) + rho * hh)


@dataclass(frozen=True)
class ImportanceSampling:
    """Defensive mixture: each gain is CN(0,1) or CN(0, rho^-beta) with probability 1/2."""

    beta: float = 1.0

    def draw(self, names: Sequence[str], n: int, rng: np.random.Generator,
             rhos: Sequence[float]) -> tuple[list[dict], list[np.ndarray]]:
        base = complex_gaussian(rng, (len(names), n))
        pick = rng.random((len(names), n)) < 0.5
        out_vals, out_w = [], []
        for rho in rhos:
            s2 = float(rho) ** (-self.beta)
            h = np.where(pick, base * math.sqrt(s2), base)
            a = np.abs(h) ** 2
            ratio = np.exp(-a * (1.0 / s2 - 1.0)) / s2
            w = np.prod(1.0 / (0.5 + 0.5 * ratio), axis=0)
            out_vals.append({v: h[i] for i, v in enumerate(names)})
            out_w.append(w)
        return out_vals, out_w


@dataclass(frozen=True)
class OutagePoint:
    p: float
    stderr: float
    events: int
    trials: int


def _outage_sums(ic: InducedChannel, r: float, rhos: Sequence[float], whiten: bool,
                 importance: ImportanceSampling | None):
    names = ic.variables()
    uses = ic.total_slots

    def run(rng, n):
        if importance is None:
            vals = FadingAssignment.sample(names, n, rng).values
            vals_list, weights = [vals] * len(rhos), [None] * len(rhos)
        else:
            vals_list, weights = importance.draw(names, n, rng, rhos)
        res = []
        for rho, vals, w in zip(rhos, vals_list, weights):
            mi = mutual_information(ic, vals, rho, whiten) / uses
            hit = mi < r * math.log2(rho)
            if w is None:
                k = int(hit.sum())
                res.append((float(k), float(k), k))
            else:
                wh = np.where(hit, w, 0.0)
                res.append((float(wh.sum()), float((wh ** 2).sum()), int(hit.sum())))
        return res

    return run


def _combine(parts: list, n_rho: int, trials: int) -> list[OutagePoint]:
    out = []
    for j in range(n_rho):
        s1 = sum(p[j][0] for p in parts)
        s2 = sum(p[j][1] for p in parts)
        ev = sum(p[j][2] for p in parts)
        mean = s1 / trials
        var = max(s2 / trials - mean * mean, 0.0)
        se = math.sqrt(var / trials) if trials > 1 else 0.0
        out.append(OutagePoint(min(mean, 1.0), se, ev, trials))
    return out


def outage_points(ic: InducedChannel, r: float, rhos: Sequence[float], trials: int,
                  whiten: bool = True, seed: int = 42,
                  importance: ImportanceSampling | None = None) -> list[OutagePoint]:
    """Outage estimates at several SNRs from common random numbers."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rhos = [float(x) for x in rhos]
    parts = _run_chunks(_outage_sums(ic, r, rhos, whiten, importance), trials, seed)
    return _combine(parts, len(rhos), trials)


def outage_probability(ic: InducedChannel, r: float, rho: float, trials: int,
                       whiten: bool = True, seed: int = 42,
                       importance: ImportanceSampling | None = None) -> OutagePoint:
    """Probability that the normalized rate falls below ``r log2 rho``."""
    return outage_points(ic, r, [rho], trials, whiten, seed, importance)[0]


# ---------------------------------------------------------------------------
# slope fitting

@dataclass(frozen=True)
class SlopeFit:
    slope: float
    ci: float
    used: tuple[bool, ...]
    residuals: tuple[float, ...]
    resid_se: tuple[float, ...]


def fit_slope(x: Sequence[float], p: Sequence[float], se: Sequence[float],
              events: Sequence[int], min_events: int = MIN_EVENTS) -> SlopeFit:
    """OLS of ``-log p`` on ``x``; CI from the per-point relative errors (delta method)."""
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    se = np.asarray(se, float)
    used = (np.asarray(events) >= min_events) & (p > 0)
    if used.sum() < 2:
        return SlopeFit(float("nan"), float("inf"), tuple(bool(u) for u in used), (), ())
    xu, yu = x[used], -np.log(p[used])
    rel = se[used] / p[used]
    xc = xu - xu.mean()
    w = xc / np.dot(xc, xc)
    slope = float(np.dot(w, yu))
    ci = float(Z95 * math.sqrt(np.sum(w ** 2 * rel ** 2)))
    resid = yu - (yu.mean() + slope * xc)
    return SlopeFit(slope, ci, tuple(bool(u) for u in used),
                    tuple(float(v) for v in resid), tuple(float(v) for v in rel))


@dataclass(frozen=True)
class OutageEstimate:
    rho_db: tuple[float, ...]
    p_out: tuple[float, ...]
    stderr: tuple[float, ...]
    events: tuple[int, ...]
    trials: int
    slope: float
    ci: float
    r: float
    whiten: bool
    seed: int
    used: tuple[bool, ...] = ()
    residuals: tuple[float, ...] = ()
    resid_se: tuple[float, ...] = ()
    importance_beta: float | None = None

    def to_csv(self) -> str:
        lines = [f"# seed={self.seed} r={self.r} whiten={str(self.whiten).lower()} "
                 f"trials={self.trials}", "rho_db,p_out,stderr,events"]
        for a, b, c, d in zip(self.rho_db, self.p_out, self.stderr, self.events):
            lines.append(f"{a:.12g},{b:.12g},{c:.12g},{d}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {"seed": self.seed, "r": self.r, "whiten": self.whiten, "trials": self.trials,
                "slope": self.slope, "ci": self.ci, "rho_db": list(self.rho_db),
                "p_out": list(self.p_out), "stderr": list(self.stderr),
                "events": list(self.events), "used_in_fit": list(self.used),
                "importance_beta": self.importance_beta}

    def curvature_ok(self, k: float = 3.0) -> bool:
        """The two highest-SNR fitted points sit within ``k`` standard errors of the line."""
        if len(self.residuals) < 3:
            return True
        return all(abs(self.residuals[i]) <= k * self.resid_se[i] for i in (-1, -2))


def estimate_diversity(ic: InducedChannel, r: float,
                       rho_db_list: Sequence[float] = DEFAULT_LADDER_DB,
                       trials: int = 1_000_000, seed: int = 42, whiten: bool = True,
                       importance: ImportanceSampling | None = None) -> OutageEstimate:
    rho_db = [float(v) for v in rho_db_list]
    if len(rho_db) < 3:
        raise ValueError("at least three SNR points are required")
    r_eff = R_ZERO if r == 0 else float(r)
    rhos = [10 ** (v / 10) for v in rho_db]
    pts = outage_points(ic, r_eff, rhos, trials, whiten, seed, importance)
    fit = fit_slope(np.log(rhos), [q.p for q in pts], [q.stderr for q in pts],
                    [q.events for q in pts])
    return OutageEstimate(tuple(rho_db), tuple(q.p for q in pts), tuple(q.stderr for q in pts),
                          tuple(q.events for q in pts), trials, fit.slope, fit.ci, r_eff,
                          whiten, seed, fit.used, fit.residuals, fit.resid_se,
                          None if importance is None else importance.beta)


@dataclass(frozen=True)
class WhitenessReport:
    white: OutageEstimate
    colored: OutageEstimate
    difference: float
    combined_ci: float

    @property
    def agree(self) -> bool:
        return self.difference <= self.combined_ci


def whiteness_check(ic: InducedChannel, r: float, rho_db_list=DEFAULT_LADDER_DB,
                    trials: int = 1_000_000, seed: int = 42,
                    importance: ImportanceSampling | None = None) -> WhitenessReport:
    """Diversity with the true noise covariance against the white-noise surrogate."""
    w = estimate_diversity(ic, r, rho_db_list, trials, seed, True, importance)
    c = estimate_diversity(ic, r, rho_db_list, trials, seed, False, importance)
    return WhitenessReport(w, c, abs(w.slope - c.slope), math.hypot(w.ci, c.ci))


# ---------------------------------------------------------------------------
# small-ball and tail behaviour of polynomials

@dataclass(frozen=True)
class ProbabilityReport:
    thresholds: tuple[float, ...]
    probs: tuple[float, ...]
    stderr: tuple[float, ...]
    events: tuple[int, ...]
    trials: int
    slope: float  # log-log slope for small-ball, stretch exponent for tails
    flag: str = ""


def _poly_sampler(poly: Poly, thresholds: Sequence[float], below: bool):
    names = sorted(poly.variables())
    th = np.asarray(thresholds, float)

    def run(rng, n):
        vals = FadingAssignment.sample(names, n, rng).values if names else {}
        f = poly.evaluate(vals) if names else np.full(n, complex(poly.evaluate({})))
        a = np.abs(np.broadcast_to(f, (n,))) ** 2
        hits = (a[None, :] < th[:, None]) if below else (a[None, :] > th[:, None])
        return hits.sum(axis=1)

    return run


def _report(counts: np.ndarray, thresholds, trials: int) -> tuple:
    p = counts / trials
    se = np.sqrt(p * (1 - p) / trials)
    return tuple(float(v) for v in p), tuple(float(v) for v in se), tuple(int(c) for c in counts)


def small_ball_check(poly: Poly, delta_list: Sequence[float], trials: int = 10_000_000,
                     seed: int = 42) -> ProbabilityReport:
    """Empirical ``Pr{|f|^2 < delta}`` and its log-log decay slope in ``delta``."""
    if poly.is_zero():
        n = len(delta_list)
        return ProbabilityReport(tuple(delta_list), (1.0,) * n, (0.0,) * n, (trials,) * n,
                                 trials, 0.0, "rank-deficient")
    parts = _run_chunks(_poly_sampler(poly, delta_list, True), trials, seed)
    counts = np.sum(parts, axis=0)
    p, se, ev = _report(counts, delta_list, trials)
    fit = fit_slope(np.log(delta_list), p, se, ev)
    # p ~ delta^s, so the slope of -log p against log delta is -s
    return ProbabilityReport(tuple(delta_list), p, se, ev, trials, -fit.slope)


def tail_bound_check(poly: Poly, k_list: Sequence[float], trials: int = 10_000_000,
                     seed: int = 42) -> ProbabilityReport:
    """Empirical ``Pr{|f|^2 > k}`` with a fitted stretch exponent ``a`` in ``exp(-c k^a)``."""
    if poly.has_constant_term():
        raise ValueError("tail check requires a polynomial without constant term")
    if poly.is_zero():
        n = len(k_list)
        return ProbabilityReport(tuple(k_list), (0.0,) * n, (0.0,) * n, (0,) * n, trials,
                                 float("inf"), "zero")
    parts = _run_chunks(_poly_sampler(poly, k_list, False), trials, seed)
    counts = np.sum(parts, axis=0)
    p, se, ev = _report(counts, k_list, trials)
    ok = [i for i, (q, e) in enumerate(zip(p, ev)) if e >= MIN_EVENTS and 0 < q < 1]
    if len(ok) >= 2:
        x = np.log(np.asarray(k_list, float)[ok])
        y = np.log(-np.log(np.asarray(p)[ok]))
        a = float(np.polyfit(x, y, 1)[0])
    else:
        a = float("nan")
    return ProbabilityReport(tuple(k_list), p, se, ev, trials, a)


# ---------------------------------------------------------------------------
# covariance and determinant invariants

@dataclass(frozen=True)
class EigenReport:
    samples: int
    failures: int
    min_lambda: float
    max_excess: float  # largest lambda_max / (1 + sum ||G_i||_F^2)

    @property
    def passed(self) -> bool:
        return self.failures == 0


def check_sigma_bounds(sigma: np.ndarray, frob2: np.ndarray, rtol: float = 1e-9) -> EigenReport:
    """``1 <= lambda_min`` and ``lambda_max <= 1 + frob2`` for each covariance in the batch."""
    sigma = np.asarray(sigma)
    if sigma.ndim == 2:
        sigma = sigma[None]
    frob2 = np.broadcast_to(np.asarray(frob2, float), sigma.shape[:1])
    lam = np.linalg.eigvalsh(sigma)
    lo, hi = lam[:, 0], lam[:, -1]
    upper = 1.0 + frob2
    bad = (lo < 1.0 - rtol) | (hi > upper * (1.0 + rtol))
    return EigenReport(len(lam), int(bad.sum()), float(lo.min()), float((hi / upper).max()))


def eigen_bound_check(ic: InducedChannel, trials: int = 1000, seed: int = 42) -> EigenReport:
    rng = np.random.default_rng(seed)
    vals = FadingAssignment.sample(ic.variables(), trials, rng).values
    sigma = noise_covariance(ic, vals)
    frob2 = np.zeros(trials)
    for g in ic.noise_transfers:
        gv = g.evaluate(vals)
        frob2 += np.sum(np.abs(gv) ** 2, axis=(-2, -1))
    return check_sigma_bounds(sigma, frob2)


@dataclass(frozen=True)
class DetInequalityReport:
    samples: int
    violations: int
    worst_margin: float  # min over samples of log2det(H) - max(log2det(H0), log2det(Hl))


def matrix_inequality_check(h: PolyMatrix, row_blocks: Sequence[int], col_blocks: Sequence[int],
                            trials: int = 200, rhos: Sequence[float] = (1.0, 10.0, 100.0),
                            seed: int = 42, tol: float = 1e-9) -> DetInequalityReport:
    """``det(I + rho H H^H)`` dominates the same quantity for the diagonal and last sub-diagonal."""
    h0, hl, _ = blt_parts(h, row_blocks, col_blocks)
    rng = np.random.default_rng(seed)
    vals = FadingAssignment.sample(sorted(h.variables()), trials, rng).values
    mats = [m.evaluate(vals) for m in (h, h0, hl)]
    n = h.rows
    bad, worst = 0, float("inf")
    for rho in rhos:
        ld = [log2det_psd(np.eye(n) + rho * a @ np.conj(np.swapaxes(a, -1, -2))) for a in mats]
        margin = ld[0] - np.maximum(ld[1], ld[2])
        bad += int(np.sum(margin < -tol * np.maximum(1.0, np.abs(ld[0]))))
        worst = min(worst, float(margin.min()))
    return DetInequalityReport(trials * len(rhos), bad, worst)
