"""Structural rank, maximum multiplexing gain, and finite-field deterministic lifts.

Structural rank is the generic rank of a polynomial matrix.  It is found by
evaluating the matrix at uniform random points of a prime field; a rank
deficit caused by an unlucky point has probability at most ``deg / p`` per
trial.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from sympy import nextprime

from .network import Cut, NetworkGraph, cut_transfer_pattern, enumerate_cuts
from .poly import PolyMatrix

RANK_PRIME = int(nextprime(2 ** 31))
LADDER_START = 2 ** 13
LADDER_STOP = 2 ** 61
_INT64_SAFE = 3_037_000_499  # floor(sqrt(2^63 - 1))


class LiftError(RuntimeError):
    """No field assignment found on the whole prime ladder."""


# ---------------------------------------------------------------------------
# elimination over F_p

def _eliminate_np(a: np.ndarray, p: int) -> tuple[int, list[int]]:
    a = np.array(a, dtype=np.int64) % p
    rows, cols = a.shape
    r, pivots = 0, []
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            a[[r, k]] = a[[k, r]]
        inv = pow(int(a[r, c]), p - 2, p)
        a[r] = (a[r] * inv) % p
        f = a[:, c].copy()
        f[r] = 0
        a = (a - (f[:, None] * a[r][None, :]) % p) % p
        pivots.append(c)
        r += 1
    return r, pivots


def _eliminate_py(a: Sequence[Sequence[int]], p: int) -> tuple[int, list[int]]:
    a = [[int(x) % p for x in row] for row in a]
    rows = len(a)
    cols = len(a[0]) if rows else 0
    r, pivots = 0, []
    for c in range(cols):
        if r == rows:
            break
        k = next((i for i in range(r, rows) if a[i][c]), None)
        if k is None:
            continue
        a[r], a[k] = a[k], a[r]
        inv = pow(a[r][c], p - 2, p)
        a[r] = [x * inv % p for x in a[r]]
        for i in range(rows):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return r, pivots


def rank_mod_p(a, p: int) -> int:
    """Rank over F_p by Gauss-Jordan elimination."""
    a = np.asarray(a, dtype=object)
    if a.size == 0:
        return 0
    if p <= _INT64_SAFE:
        return _eliminate_np(a.astype(np.int64), p)[0]
    return _eliminate_py(a.tolist(), p)[0]


def _pivots(a, p: int) -> tuple[int, list[int], list[int]]:
    """Rank with independent column and row indices (their crossing minor is nonsingular)."""
    elim = _eliminate_np if p <= _INT64_SAFE else _eliminate_py
    arr = np.asarray(a, dtype=np.int64 if p <= _INT64_SAFE else object)
    r, cols = elim(arr if p <= _INT64_SAFE else arr.tolist(), p)
    _, rows = elim(arr.T.copy() if p <= _INT64_SAFE else arr.T.tolist(), p)
    return r, rows, cols


def integer_rank(a: Sequence[Sequence[int]]) -> int:
    """Exact rank over the rationals by fraction-free (Bareiss) elimination."""
    m = [[int(x) for x in row] for row in a]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    r, prev = 0, 1
    for c in range(cols):
        if r == rows:
            break
        k = next((i for i in range(r, rows) if m[i][c]), None)
        if k is None:
            continue
        m[r], m[k] = m[k], m[r]
        for i in range(r + 1, rows):
            m[i] = [(m[r][c] * m[i][j] - m[i][c] * m[r][j]) // prev for j in range(cols)]
        prev = m[r][c]
        r += 1
    return r


# ---------------------------------------------------------------------------
# structural rank

def term_rank(m: PolyMatrix) -> int:
    """Maximum matching of the support graph; an upper bound on the structural rank."""
    adj: dict[int, list[int]] = {}
    for i, j in sorted(m.support()):
        adj.setdefault(i, []).append(j)
    match_col: dict[int, int] = {}

    def augment(i, seen):
        for j in adj.get(i, ()):
            if j in seen:
                continue
            seen.add(j)
            if j not in match_col or augment(match_col[j], seen):
                match_col[j] = i
                return True
        return False

    return sum(augment(i, set()) for i in adj)


@dataclass(frozen=True)
class RankResult:
    rank: int
    failure_bound: float  # Schwartz-Zippel bound on underestimating the rank
    rows: tuple[int, ...]  # witness rows
    cols: tuple[int, ...]  # witness columns
    trials: int
    p: int


def structural_rank(m: PolyMatrix, trials: int = 20, seed: int = 42,
                    p: int = RANK_PRIME) -> RankResult:
    """Generic rank of ``m`` by random evaluation over F_p, best of ``trials`` draws."""
    full = min(m.rows, m.cols)
    if full == 0 or m.is_zero():
        return RankResult(0, 0.0, (), (), 0, p)
    names = sorted(m.variables())
    cap = term_rank(m)
    best = (-1, (), ())
    used = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        vals = dict(zip(names, (int(x) for x in rng.integers(0, p, size=len(names)))))
        used += 1
        r, rows, cols = _pivots(m.evaluate_mod(vals, p), p)
        if r > best[0]:
            best = (r, tuple(rows), tuple(cols))
        if best[0] == cap:
            break
    # reaching the matching bound certifies the value
    deg = best[0] * max(m.max_degree(), 1) if best[0] < cap else 0
    bound = min(1.0, deg / p) ** used if deg else 0.0
    return RankResult(best[0], bound, best[1], best[2], used, p)


# ---------------------------------------------------------------------------
# maximum multiplexing gain

@dataclass(frozen=True)
class CutRank:
    cut: Cut
    rank: int
    witness_rows: tuple[int, ...]
    witness_cols: tuple[int, ...]
    failure_bound: float


@dataclass(frozen=True)
class MmgResult:
    value: int
    per_cut: tuple[tuple[Cut, int], ...]
    per_sink: dict = field(default_factory=dict)
    details: tuple[CutRank, ...] = ()


def cut_ranks(net: NetworkGraph, source: str | None = None, sink: str | None = None,
              seed: int = 42, trials: int = 20) -> list[CutRank]:
    out = []
    for cut in enumerate_cuts(net, source, sink):
        res = structural_rank(cut_transfer_pattern(net, cut), trials, seed)
        out.append(CutRank(cut, res.rank, res.rows, res.cols, res.failure_bound))
    return out


def mmg(net: NetworkGraph, source: str | None = None, sinks: Sequence[str] | None = None,
        seed: int = 42, trials: int = 20) -> MmgResult:
    """Minimum cut structural rank; with several sinks, the minimum over sinks (multicast)."""
    if sinks is None:
        source, sink = net.terminals(source, None)
        sinks = [sink]
    else:
        source = net.terminals(source, sinks[0])[0]
    per_sink, first = {}, None
    for s in sinks:
        ranks = cut_ranks(net, source, s, seed, trials)
        per_sink[s] = min(c.rank for c in ranks)
        if first is None:
            first = ranks
    return MmgResult(min(per_sink.values()), tuple((c.cut, c.rank) for c in first),
                     per_sink, tuple(first))


# ---------------------------------------------------------------------------
# deterministic network

def prime_ladder(start: int = LADDER_START, stop: int = LADDER_STOP) -> Iterable[int]:
    p = int(nextprime(start))
    while p <= stop:
        yield p
        p = int(nextprime(2 * p))


@dataclass(frozen=True)
class DetNetwork:
    net: NetworkGraph
    p: int
    q: int
    xi: dict  # edge id -> field element
    source: str
    sink: str
    witnesses: tuple[CutRank, ...] = ()
    attempts: int = 1

    def values(self) -> dict[str, int]:
        return {self.net.edges[k].var: v for k, v in self.xi.items()}

    def to_json(self) -> dict:
        return {"p": self.p, "q": self.q,
                "xi": {str(k): v for k, v in sorted(self.xi.items())},
                "vars": {str(k): self.net.edges[k].var for k in sorted(self.xi)},
                "source": self.source, "sink": self.sink, "attempts": self.attempts}


def _witness_ok(net: NetworkGraph, w: CutRank, vals: dict[str, int], p: int) -> bool:
    if w.rank == 0:
        return True
    sub = cut_transfer_pattern(net, w.cut).submatrix(w.witness_rows, w.witness_cols)
    return rank_mod_p(sub.evaluate_mod(vals, p), p) == w.rank


def derive_deterministic(net: NetworkGraph, source: str | None = None, sink: str | None = None,
                         seed: int = 42, ladder: Iterable[int] | None = None) -> DetNetwork:
    """Pick ``p`` and ``xi`` so that every cut's full-rank witness minor survives mod ``p``."""
    source, sink = net.terminals(source, sink)
    witnesses = cut_ranks(net, source, sink, seed)
    q = max(n.antennas for n in net.nodes)
    rng = np.random.default_rng([seed, 1])
    names = net.variables()
    attempts = 0
    for p in (prime_ladder() if ladder is None else ladder):
        attempts += 1
        vals = {v: int(rng.integers(0, p)) for v in names}
        if all(_witness_ok(net, w, vals, p) for w in witnesses):
            xi = {k: vals[e.var] for k, e in enumerate(net.edges)}
            return DetNetwork(net, p, q, xi, source, sink, tuple(witnesses), attempts)
    raise LiftError("prime ladder exhausted without a valid assignment")


@dataclass(frozen=True)
class DetRankReport:
    value: int
    per_cut: tuple[tuple[Cut, int], ...]


def det_min_cut_rank(d: DetNetwork) -> DetRankReport:
    """Min over cuts of the F_p rank of the cut matrix: the zero-error capacity in symbols."""
    vals = d.values()
    per = []
    for cut in enumerate_cuts(d.net, d.source, d.sink):
        pat = cut_transfer_pattern(d.net, cut)
        r = 0 if pat.is_zero() else rank_mod_p(pat.evaluate_mod(vals, d.p), d.p)
        per.append((cut, r))
    return DetRankReport(min(r for _, r in per), tuple(per))


@dataclass(frozen=True)
class LiftResult:
    assignment: dict[str, complex]
    rank: int  # min over cuts of the numeric rank
    witness_rank: int  # min over cuts of the witness size
    per_cut: tuple[tuple[Cut, int, int], ...]  # (cut, numeric rank, exact rank)
    ill_conditioned: tuple[Cut, ...]

    @property
    def ok(self) -> bool:
        return self.rank >= self.witness_rank


def numeric_rank(a: np.ndarray, rel_tol: float = 1e-9) -> int:
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def _integer_matrix(m: PolyMatrix, values: dict[str, int]) -> list[list[int]]:
    out = [[0] * m.cols for _ in range(m.rows)]
    for (i, j), poly in m.entries.items():
        out[i][j] = int(poly.evaluate(values))
    return out


def lift_to_fading(d: DetNetwork, source_net: NetworkGraph | None = None,
                   rel_tol: float = 1e-9) -> LiftResult:
    """Use the integer images of ``xi`` as complex fading values and re-measure cut ranks."""
    net = d.net if source_net is None else source_net
    ints = d.values()
    assignment = {v: complex(ints[v]) for v in net.variables()}
    per, bad = [], []
    for cut in enumerate_cuts(net, d.source, d.sink):
        pat = cut_transfer_pattern(net, cut)
        if pat.is_zero():
            per.append((cut, 0, 0))
            continue
        num = numeric_rank(pat.evaluate(assignment), rel_tol)
        exact = integer_rank(_integer_matrix(pat, ints))
        if num != exact:
            bad.append(cut)
        per.append((cut, num, exact))
    witness = min(w.rank for w in d.witnesses) if d.witnesses else 0
    return LiftResult(assignment, min(n for _, n, _ in per), witness, tuple(per), tuple(bad))
