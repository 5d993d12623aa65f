"""Amplify-and-forward schedules, their induced channels, and protocol DMT bounds.

Channel model: in every slot the listed live edges determine which antennas
transmit (edge tails) and which listen (edge heads).  Every edge from a
transmitting antenna to a listening antenna then contributes, which captures
broadcast and interference.  Relays forward, with unit gain, what they
received in their most recent listening slot strictly before the current
one.  Every listening event injects a fresh unit-variance noise sample.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .dmt import (CurveError, DmtCurve, ZERO_CURVE, all_compositions, blt_lower_bound, curve_max, curve_sum,
                  from_samples, line, parallel_identical, parallel_repeated, rayleigh_mimo_dmt,
                  scale_rate, weighted_parallel)
from .network import (Edge, NetworkGraph, NetworkError, SuperNode, edge_disjoint_paths,
                      find_cycle, network_is_acyclic, path_has_shortcut, path_nodes,
                      validate_schedule)
from .poly import ZERO, Poly, PolyMatrix

Port = tuple[str, int]


class ScheduleError(ValueError):
    """Schedule that cannot be executed on the network."""


class ProtocolInfeasible(RuntimeError):
    """Network violates the structural preconditions of a protocol."""

    def __init__(self, diagnosis: str):
        super().__init__(diagnosis)
        self.diagnosis = diagnosis


@dataclass(frozen=True)
class Schedule:
    slots: tuple[frozenset[int], ...]
    zero_slots: frozenset[int] = frozenset()
    # (slot, node) -> for each antenna of node, the antenna whose buffer it forwards
    forward: Mapping[tuple[int, str], tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(frozenset(s) for s in self.slots))
        object.__setattr__(self, "zero_slots", frozenset(self.zero_slots))

    @property
    def total_slots(self) -> int:
        return len(self.slots)

    def source_symbols(self, net: NetworkGraph, source: str | None = None) -> int:
        if source is None:
            source = net.sources()[0]
        n = 0
        for t, live in enumerate(self.slots):
            if t in self.zero_slots:
                continue
            n += len({net.edges[k].src for k in live if net.edges[k].tail == source})
        return n

    def to_json(self) -> dict:
        return {"slots": [sorted(s) for s in self.slots],
                "zero_slots": sorted(self.zero_slots),
                "forward": [{"slot": t, "node": n, "map": list(m)}
                            for (t, n), m in sorted(self.forward.items())]}


@dataclass(frozen=True)
class InducedChannel:
    signal: PolyMatrix
    noise_transfers: tuple[PolyMatrix, ...]
    total_slots: int
    data_slots: int
    noise_labels: tuple[str, ...] = ()
    row_slots: tuple[int, ...] = ()  # slot of each received row
    col_slots: tuple[int, ...] = ()  # slot of each data symbol

    def variables(self) -> list[str]:
        vs = set(self.signal.variables())
        for g in self.noise_transfers:
            vs |= g.variables()
        return sorted(vs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.signal.shape

    def restrict_rows(self, rows: Sequence[int]) -> "InducedChannel":
        cols = range(self.signal.cols)
        gs, labels = [], []
        for g, lab in zip(self.noise_transfers, self.noise_labels):
            sub = g.submatrix(rows, range(g.cols))
            keep = sorted({j for _, j in sub.support()})
            if keep:
                gs.append(sub.submatrix(range(sub.rows), keep))
                labels.append(lab)
        return InducedChannel(self.signal.submatrix(rows, cols), tuple(gs), self.total_slots,
                              self.data_slots, tuple(labels),
                              tuple(self.row_slots[i] for i in rows) if self.row_slots else (),
                              self.col_slots)

    def slot_blocks(self) -> tuple[list[int], list[int]]:
        """Row and column block sizes grouped by slot, for block-triangular analysis."""
        def runs(xs):
            return [len(list(g)) for _, g in itertools.groupby(xs)]
        return runs(self.row_slots), runs(self.col_slots)

    def to_json(self) -> dict:
        return {"signal": self.signal.to_json(),
                "noise_transfers": [{"relay": lab, "matrix": g.to_json()}
                                    for lab, g in zip(self.noise_labels, self.noise_transfers)],
                "total_slots": self.total_slots, "data_slots": self.data_slots}


# ---------------------------------------------------------------------------
# symbolic propagation

def build_induced_channel(net: NetworkGraph, schedule: Schedule, source: str | None = None,
                          sink: str | None = None) -> InducedChannel:
    source, sink = net.terminals(source, sink)
    bad = validate_schedule(net, schedule.slots)
    if bad:
        v = bad[0]
        raise ScheduleError(f"slot {v.slot}: node {v.node!r}: {v.reason}")
    # a port's content is (signal: {col: Poly}, noise: {noise_id: Poly})
    buffers: dict[str, dict[int, tuple[dict, dict]]] = {}
    noise_owner: list[str] = []
    rows: list[tuple[dict, dict]] = []
    row_slots, col_slots = [], []
    n_cols = 0
    for t, live in enumerate(schedule.slots):
        tx = sorted({net.edges[k].src for k in live})
        rx = sorted({net.edges[k].dst for k in live})
        content: dict[Port, tuple[dict, dict]] = {}
        for port in tx:
            node, ant = port
            if node == source:
                if t in schedule.zero_slots:
                    content[port] = ({}, {})
                else:
                    content[port] = ({n_cols: Poly.const(1)}, {})
                    col_slots.append(t)
                    n_cols += 1
                continue
            buf = buffers.get(node)
            if buf is None:
                raise ScheduleError(f"slot {t}: node {node!r} transmits with an empty buffer")
            fmap = schedule.forward.get((t, node))
            src_ant = ant if fmap is None else fmap[ant]
            content[port] = buf.get(src_ant, ({}, {}))
        received: dict[str, dict[int, tuple[dict, dict]]] = {}
        for port in rx:
            sig: dict[int, Poly] = {}
            noi: dict[int, Poly] = {}
            for k in net.in_edges(port[0]):
                e = net.edges[k]
                if e.dst != port or e.src not in content:
                    continue
                h = Poly.var(e.var)
                s_in, n_in = content[e.src]
                for c, p in s_in.items():
                    sig[c] = sig.get(c, ZERO) + h * p
                for c, p in n_in.items():
                    noi[c] = noi.get(c, ZERO) + h * p
            if port[0] != source:
                nid = len(noise_owner)
                noise_owner.append(port[0])
                noi[nid] = noi.get(nid, ZERO) + Poly.const(1)
            if port[0] == sink:
                rows.append((sig, noi))
                row_slots.append(t)
            received.setdefault(port[0], {})[port[1]] = (sig, noi)
        # receptions become buffers only after the slot, so forwarding lags one slot
        for node, got in received.items():
            if node != source:
                buffers[node] = got
    signal = PolyMatrix(len(rows), n_cols,
                        {(i, c): p for i, (sig, _) in enumerate(rows) for c, p in sig.items()})
    relays = [n.id for n in net.nodes if n.id not in (source, sink)]
    gs, labels = [], []
    for r in relays:
        ids = [k for k, o in enumerate(noise_owner) if o == r]
        if not ids:
            continue
        col = {nid: j for j, nid in enumerate(ids)}
        ent = {(i, col[nid]): p for i, (_, noi) in enumerate(rows)
               for nid, p in noi.items() if nid in col}
        g = PolyMatrix(len(rows), len(ids), ent)
        if not g.is_zero():
            gs.append(g)
            labels.append(r)
    data_slots = len(set(col_slots))
    return InducedChannel(signal, tuple(gs), schedule.total_slots, data_slots, tuple(labels),
                          tuple(row_slots), tuple(col_slots))


def simulate_schedule(net: NetworkGraph, schedule: Schedule, values: Mapping[str, complex],
                      symbols: Sequence[complex], source: str | None = None,
                      sink: str | None = None) -> np.ndarray:
    """Noiseless numeric slot-by-slot run of a schedule; returns the sink observations."""
    source, sink = net.terminals(source, sink)
    symbols = list(symbols)
    nxt = 0
    held: dict[str, dict[int, complex]] = {}
    out = []
    for t, live in enumerate(schedule.slots):
        live_edges = [net.edges[k] for k in live]
        tx = {e.src for e in live_edges}
        rx = {e.dst for e in live_edges}
        sent = {}
        for node, ant in sorted(tx):
            if node == source:
                if t in schedule.zero_slots:
                    sent[(node, ant)] = 0j
                else:
                    sent[(node, ant)] = complex(symbols[nxt])
                    nxt += 1
            else:
                fmap = schedule.forward.get((t, node))
                sent[(node, ant)] = held[node].get(ant if fmap is None else fmap[ant], 0j)
        heard: dict[Port, complex] = {p: 0j for p in rx}
        for e in net.edges:
            if e.src in sent and e.dst in heard:
                heard[e.dst] += values[e.var] * sent[e.src]
        for node, ant in sorted(heard):
            if node == sink:
                out.append(heard[(node, ant)])
        fresh: dict[str, dict[int, complex]] = {}
        for (node, ant), y in heard.items():
            fresh.setdefault(node, {})[ant] = y
        for node, got in fresh.items():
            if node != source:
                held[node] = got
    return np.array(out, dtype=complex)


def noise_covariance(ic: InducedChannel, assignment: Mapping[str, object]) -> np.ndarray:
    """``I + sum_i G_i G_i^H``; batched if the assignment holds arrays."""
    n = ic.signal.rows
    sample = next(iter(assignment.values()), 0) if assignment else 0
    batch = np.shape(sample)
    sigma = np.broadcast_to(np.eye(n, dtype=complex), batch + (n, n)).copy()
    for g in ic.noise_transfers:
        gv = g.evaluate(assignment)
        sigma += gv @ np.conj(np.swapaxes(gv, -1, -2))
    return sigma


# ---------------------------------------------------------------------------
# block-lower-triangular structure

def blt_parts(h: PolyMatrix, row_blocks: Sequence[int], col_blocks: Sequence[int]
              ) -> tuple[PolyMatrix, PolyMatrix, int]:
    """Diagonal part, last nonzero sub-diagonal part and its offset ``ell``."""
    if len(row_blocks) != len(col_blocks):
        raise ValueError("row and column block counts differ")
    if sum(row_blocks) != h.rows or sum(col_blocks) != h.cols:
        raise ValueError("block sizes do not tile the matrix")
    rb = np.repeat(np.arange(len(row_blocks)), row_blocks)
    cb = np.repeat(np.arange(len(col_blocks)), col_blocks)
    offsets = {}
    for (i, j) in h.support():
        off = int(rb[i] - cb[j])
        if off < 0:
            raise ValueError(f"entry ({i}, {j}) lies above the block diagonal")
        offsets.setdefault(off, set()).add((i, j))
    ell = max(offsets, default=0)
    h0 = h.restrict(lambda i, j: (i, j) in offsets.get(0, ()))
    hl = h.restrict(lambda i, j: (i, j) in offsets.get(ell, ()))
    return h0, hl, ell


def band_parts(h: PolyMatrix) -> tuple[PolyMatrix, PolyMatrix]:
    """Uppermost and lowermost nonzero diagonals (by ``col - row`` offset)."""
    offs = {}
    for (i, j) in h.support():
        offs.setdefault(j - i, set()).add((i, j))
    if not offs:
        return h, h
    hi, lo = offs[max(offs)], offs[min(offs)]
    return h.restrict(lambda i, j: (i, j) in hi), h.restrict(lambda i, j: (i, j) in lo)


def _components(m: PolyMatrix) -> list[tuple[list[int], list[int]]]:
    """Connected components of the row/column support graph."""
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (i, j) in m.support():
        a, b = find(("r", i)), find(("c", j))
        if a != b:
            parent[a] = b
    groups: dict = {}
    for (i, j) in sorted(m.support()):
        groups.setdefault(find(("r", i)), (set(), set()))
        groups[find(("r", i))][0].add(i)
        groups[find(("r", i))][1].add(j)
    return [(sorted(r), sorted(c)) for r, c in groups.values()]


def matrix_dmt(m: PolyMatrix) -> DmtCurve:
    """DMT of a block-parallel matrix whose blocks are monomials or i.i.d. Rayleigh blocks.

    Blocks are the connected components of the support.  A 1x1 monomial
    block has DMT ``(1 - r)^+`` (product of Rayleigh gains); a block whose
    entries are distinct single variables and has full support is an i.i.d.
    Rayleigh MIMO block.  Identical blocks are merged as repeated
    coefficients; distinct blocks must not share variables.
    """
    if m.is_zero():
        return ZERO_CURVE
    groups: dict = {}
    blocks = {}
    for rows, cols in _components(m):
        blk = m.submatrix(rows, cols)
        key = (blk.rows, blk.cols, frozenset(blk.entries.items()))
        blocks.setdefault(key, blk)
        groups[key] = groups.get(key, 0) + 1
    curves = []
    seen_vars: set[str] = set()
    for key, blk in blocks.items():
        vs = set(blk.variables())
        if vs & seen_vars:
            raise CurveError("blocks share fading variables; parallel formula does not apply")
        seen_vars |= vs
        if blk.rows == blk.cols == 1:
            p = blk[0, 0]
            if not p.is_monomial() or not p.variables():
                raise CurveError(f"entry {p!r} is not a fading monomial")
            curves.append(line(1, 1))
        elif (len(blk.entries) == blk.rows * blk.cols
              and all(p.is_monomial() and p.degree() == 1 for p in blk.entries.values())
              and len(vs) == blk.rows * blk.cols):
            curves.append(rayleigh_mimo_dmt(blk.cols, blk.rows))
        else:
            raise CurveError("block is neither a monomial nor an i.i.d. Rayleigh block")
    return parallel_repeated(curves, list(groups.values()))


def blt_bound(ic: InducedChannel, row_blocks: Sequence[int] | None = None,
              col_blocks: Sequence[int] | None = None, transpose: bool = False) -> DmtCurve:
    """Protocol DMT lower bound from the diagonal and last sub-diagonal of the channel."""
    h = ic.signal.transpose() if transpose else ic.signal
    if row_blocks is None:
        row_blocks, col_blocks = ic.slot_blocks()
        if transpose:
            row_blocks, col_blocks = col_blocks, row_blocks
    h0, hl, ell = blt_parts(h, row_blocks, col_blocks)
    d0 = matrix_dmt(h0)
    if ell == 0:
        d_h = d0
    else:
        dl = matrix_dmt(hl)
        d_h = blt_lower_bound(d0, dl, not (h0.variables() & hl.variables()))
    return scale_rate(d_h, ic.total_slots, 1)


# ---------------------------------------------------------------------------
# NAF family

def naf_network(n_relays: int = 1, n_s: int = 1, n_r: int = 1, n_d: int = 1) -> NetworkGraph:
    """Source ``s``, relays ``r1..rN`` (half-duplex), sink ``t``.

    Single-antenna variables follow the usual names: ``g_d`` for the direct
    link, ``g_i`` source to relay ``i`` and ``h_i`` relay ``i`` to sink.
    """
    nodes = [SuperNode("s", n_s, "source", "half")]
    nodes += [SuperNode(f"r{i}", n_r, "relay", "half") for i in range(1, n_relays + 1)]
    nodes.append(SuperNode("t", n_d, "sink", "half"))
    edges = []

    def link(a, na, b, nb, name):
        for i in range(na):
            for j in range(nb):
                var = name if na == nb == 1 else f"{name}_{j}_{i}"
                edges.append(Edge((a, i), (b, j), var))

    link("s", n_s, "t", n_d, "g_d")
    for i in range(1, n_relays + 1):
        link("s", n_s, f"r{i}", n_r, f"g_{i}")
        link(f"r{i}", n_r, "t", n_d, f"h_{i}")
    return NetworkGraph(nodes, edges)


def naf_schedule(net: NetworkGraph, n_relays: int = 1) -> Schedule:
    """Two slots per relay: source broadcasts, then source and relay send to the sink."""
    slots = []
    for i in range(1, n_relays + 1):
        r = f"r{i}"
        first = {k for k, e in enumerate(net.edges)
                 if e.tail == "s" and e.head in ("t", r)}
        second = {k for k, e in enumerate(net.edges)
                  if (e.tail == "s" and e.head == "t") or (e.tail == r and e.head == "t")}
        slots += [first, second]
    return Schedule(tuple(slots))


def naf_single() -> tuple[InducedChannel, DmtCurve]:
    net = naf_network(1)
    ic = build_induced_channel(net, naf_schedule(net, 1))
    bound = scale_rate(blt_lower_bound(line(1, 2), line(1, 1), True), 2, 1)
    return ic, bound


def naf_n_relay(n: int) -> InducedChannel:
    net = naf_network(n)
    return build_induced_channel(net, naf_schedule(net, n))


def naf_n_relay_bound(n: int) -> DmtCurve:
    if n < 1:
        raise ValueError("need at least one relay")
    return curve_sum(line(1, 1), line(n, Fraction(1, 2)))


# ---------------------------------------------------------------------------
# SAF

def saf_matrix(n: int, k: int) -> InducedChannel:
    """Relay-isolated slotted AF channel with ``M = kN + 1`` slots.

    The relay path gain ``g_i`` is the product ``f_i * h_i`` of the
    source-relay and relay-sink coefficients; relay ``i``'s noise reaches
    the sink through ``h_i``.
    """
    if n < 1 or k < 1:
        raise ValueError("need N >= 1 relays and k >= 1 cycles")
    m = k * n + 1
    ent = {(i, i): Poly.var("g_d") for i in range(m)}
    noise: dict[int, dict] = {i: {} for i in range(1, n + 1)}
    for j in range(m - 1):
        relay = j % n + 1
        ent[(j + 1, j)] = Poly.product([f"f_{relay}", f"h_{relay}"])
        g = noise[relay]
        g[(j + 1, len(g))] = Poly.var(f"h_{relay}")
    gs = tuple(PolyMatrix(m, len(g), g) for _, g in sorted(noise.items()))
    return InducedChannel(PolyMatrix(m, m, ent), gs, m, m,
                          tuple(f"r{i}" for i in range(1, n + 1)),
                          tuple(range(m)), tuple(range(m)))


def saf_network(n: int) -> NetworkGraph:
    """Direct link plus ``N`` isolated half-duplex relays; relay links are ``f_i``, ``h_i``."""
    nodes = [SuperNode("s", 1, "source", "half")]
    nodes += [SuperNode(f"r{i}", 1, "relay", "half") for i in range(1, n + 1)]
    nodes.append(SuperNode("t", 1, "sink", "half"))
    edges = [Edge(("s", 0), ("t", 0), "g_d")]
    for i in range(1, n + 1):
        edges.append(Edge(("s", 0), (f"r{i}", 0), f"f_{i}"))
        edges.append(Edge((f"r{i}", 0), ("t", 0), f"h_{i}"))
    return NetworkGraph(nodes, edges)


def saf_schedule(net: NetworkGraph, n: int, k: int) -> Schedule:
    """Slot ``j``: the source sends, relay ``j mod N`` listens, the previous relay forwards."""
    m = k * n + 1
    slots = []
    for j in range(m):
        live = {net.edge_by_var("g_d")}
        if j < m - 1:
            live.add(net.edge_by_var(f"f_{j % n + 1}"))
        if j > 0:
            live.add(net.edge_by_var(f"h_{(j - 1) % n + 1}"))
        slots.append(live)
    return Schedule(tuple(slots))


def saf_bound(n: int, m: int) -> DmtCurve:
    """``(1 - r)^+ + N (1 - M r / (M - 1))^+``."""
    if m < 2 or n < 1:
        raise ValueError("need M >= 2 slots and N >= 1 relays")
    return curve_sum(line(1, 1), line(n, Fraction(m - 1, m)))


# ---------------------------------------------------------------------------
# MIMO NAF and generalized NAF

def mimo_naf(n_s: int, n_r: int, n_d: int, d_product: DmtCurve) -> DmtCurve:
    """Direct-link MIMO curve plus the product-channel curve at twice the rate."""
    del n_r  # enters only through the supplied product curve
    return curve_sum(rayleigh_mimo_dmt(n_s, n_d), scale_rate(d_product, 2, 1))


def mimo_naf_channel(n_s: int, n_r: int, n_d: int) -> InducedChannel:
    net = naf_network(1, n_s, n_r, n_d)
    return build_induced_channel(net, naf_schedule(net, 1))


@dataclass(frozen=True)
class GenNafResult:
    curve: DmtCurve
    fractions: tuple[tuple[float, tuple[float, ...]], ...]  # (r, f) for the optimized form


def _relay_part(relay_curves, fractions) -> DmtCurve:
    return scale_rate(weighted_parallel(relay_curves, fractions), 2, 1)


def gen_naf_bound(d_direct: DmtCurve, relay_curves: Sequence[DmtCurve],
                  fractions: Sequence | str = "optimize", resolution: int = 50,
                  refine_rounds: int = 3, r_step: float = 0.01) -> GenNafResult:
    """``d_direct(r) + sup_f inf_{sum f_i r_i = 2r} sum d_i(r_i)``.

    With explicit fractions the curve is exact.  With ``"optimize"`` the
    simplex is searched on a grid of step ``1/resolution`` followed by
    ``refine_rounds`` halvings around the incumbent, separately at each r of
    a grid of step ``r_step``; the returned curve interpolates those values.
    """
    relay_curves = list(relay_curves)
    if not relay_curves:
        return GenNafResult(d_direct, ())
    n = len(relay_curves)
    if not isinstance(fractions, str):
        f = [Fraction(x) if isinstance(x, (int, Fraction)) else float(x) for x in fractions]
        if len(f) != n:
            raise ValueError("one fraction per relay required")
        if any(x < 0 for x in f) or abs(float(sum(f)) - 1.0) > 1e-9:
            raise ValueError("fractions must be nonnegative and sum to 1")
        return GenNafResult(curve_sum(d_direct, _relay_part(relay_curves, f)), ())
    if n == 1:
        return GenNafResult(curve_sum(d_direct, _relay_part(relay_curves, [1])),
                            ((0.0, (1.0,)),))
    r_top = float(max(d_direct.r_max, sum(c.r_max for c in relay_curves) / 2))
    rs = np.unique(np.concatenate([np.arange(0.0, r_top + r_step / 2, r_step), [r_top]]))
    cands = [tuple(c / resolution for c in comp) for comp in all_compositions(resolution, n)]
    table = np.array([_relay_part(relay_curves, f).evaluate(rs) for f in cands])
    # ties (flat regions) go to the candidate nearest the uniform split
    spread = np.array([np.abs(np.asarray(f) - 1.0 / n).sum() for f in cands])
    best_idx = np.argmax(np.round(table, 12) - 1e-13 * spread[:, None], axis=0)
    best_val = table[best_idx, np.arange(len(rs))]
    best_f = [cands[i] for i in best_idx]
    step = 1.0 / resolution
    for _ in range(refine_rounds):
        step /= 2
        for k, r in enumerate(rs):
            f0 = best_f[k]
            for i, j in itertools.permutations(range(n), 2):
                f = list(f0)
                f[i] += step
                f[j] -= step
                if f[j] < -1e-15:
                    continue
                f[j] = max(f[j], 0.0)
                val = float(_relay_part(relay_curves, f).evaluate(r))
                if val > best_val[k] + 1e-12:
                    best_val[k], best_f[k] = val, tuple(f)
    total = d_direct.evaluate(rs) + best_val
    curve = from_samples(rs, total)
    return GenNafResult(curve, tuple((float(r), tuple(f)) for r, f in zip(rs, best_f)))


# ---------------------------------------------------------------------------
# edge-disjoint path protocol

@dataclass(frozen=True)
class ProtocolRun:
    schedule: Schedule
    channel: InducedChannel
    curve: DmtCurve
    paths: tuple[tuple[int, ...], ...]
    limit_curve: DmtCurve | None = None
    condition: str = ""


def edge_disjoint_protocol(net: NetworkGraph, source: str | None = None,
                           sink: str | None = None) -> ProtocolRun:
    """Activate the edges of a maximal set of edge-disjoint paths one at a time."""
    source, sink = net.terminals(source, sink)
    paths = edge_disjoint_paths(net, source, sink)
    if not paths:
        raise ProtocolInfeasible("disconnected: no path from source to sink")
    slots, forward = [], {}
    for path in paths:
        for j, k in enumerate(path):
            e = net.edges[k]
            if j > 0:
                prev = net.edges[path[j - 1]]
                fmap = list(range(net.node(e.tail).antennas))
                fmap[e.src[1]] = prev.dst[1]
                forward[(len(slots), e.tail)] = tuple(fmap)
            slots.append({k})
    sched = Schedule(tuple(slots), frozenset(), forward)
    ic = build_induced_channel(net, sched, source, sink)
    m = len(paths)
    n_total = sum(len(p) for p in paths)
    curve = scale_rate(parallel_identical(line(1, 1), m), n_total, 1)
    return ProtocolRun(sched, ic, curve, tuple(paths))


# ---------------------------------------------------------------------------
# full-duplex linear-DMT protocol

def fd_linear_diagnosis(net: NetworkGraph, source: str | None = None,
                        sink: str | None = None) -> tuple[str, list]:
    """Which precondition holds ("acyclic" or "no-shortcut"), plus the path set."""
    source, sink = net.terminals(source, sink)
    if not net.is_single_antenna():
        raise ProtocolInfeasible("network has multi-antenna nodes; single antennas required")
    half = [n.id for n in net.nodes if n.duplex == "half"]
    if half:
        raise ProtocolInfeasible(f"half-duplex nodes present: {', '.join(half)}")
    paths = edge_disjoint_paths(net, source, sink)
    if not paths:
        raise ProtocolInfeasible("disconnected: no path from source to sink")
    if network_is_acyclic(net):
        return "acyclic", paths
    with_shortcut = [p for p in paths if path_has_shortcut(net, p)]
    if not with_shortcut:
        return "no-shortcut", paths
    alt = shortcut_free_paths(net, len(paths), source, sink)
    if alt is not None:
        return "no-shortcut", alt
    cycle = find_cycle(net)
    bad = path_nodes(net, with_shortcut[0])
    raise ProtocolInfeasible(f"cycle found: {' -> '.join(cycle)}; "
                             f"shortcut found on path {' -> '.join(bad)} "
                             f"and on every other set of {len(paths)} edge-disjoint paths")


def shortcut_free_paths(net: NetworkGraph, m: int, source: str, sink: str,
                        max_paths: int = 100_000) -> list[tuple[int, ...]] | None:
    """Some ``m`` edge-disjoint source-sink paths without shortcuts, or None.

    Exhaustive over simple paths (shortest first, then by edge ids).
    """
    found: list[tuple[int, ...]] = []

    def walk(node, path, seen):
        if len(found) > max_paths:
            raise ProtocolInfeasible("too many simple paths to search for a shortcut-free set")
        if node == sink:
            if not path_has_shortcut(net, path):
                found.append(tuple(path))
            return
        for k in net.out_edges(node):
            nxt = net.edges[k].head
            if nxt not in seen:
                walk(nxt, path + [k], seen | {nxt})

    walk(source, [], {source})
    found.sort(key=lambda p: (len(p), p))

    def pick(start, chosen, used):
        if len(chosen) == m:
            return list(chosen)
        for i in range(start, len(found)):
            p = found[i]
            if used.isdisjoint(p):
                got = pick(i + 1, chosen + [p], used | set(p))
                if got:
                    return got
        return None

    return pick(0, [], set())


def fd_linear_protocol(net: NetworkGraph, slots: int | None = None,
                       source: str | None = None, sink: str | None = None) -> ProtocolRun:
    """Each path in turn is kept live for ``T`` slots; the source pads with ``D`` zeros.

    ``slots=None`` returns only the limiting curve ``M (1 - r)^+`` with no
    schedule or channel.
    """
    source, sink = net.terminals(source, sink)
    condition, paths = fd_linear_diagnosis(net, source, sink)
    m = len(paths)
    limit = line(m, 1)
    delay = max(len(p) for p in paths)
    if slots is None:
        return ProtocolRun(None, None, limit, tuple(paths), limit, condition)
    if slots <= delay:
        raise ValueError(f"T = {slots} must exceed the path delay D = {delay}")
    live, zero = [], set()
    for b, path in enumerate(paths):
        for t in range(slots):
            live.append({k for j, k in enumerate(path) if t >= j})
            if t >= slots - delay:
                zero.add(b * slots + t)
    sched = Schedule(tuple(live), frozenset(zero))
    full = build_induced_channel(net, sched, source, sink)
    # keep, per path, the T - D sink observations aligned with the data symbols
    keep = []
    for b, path in enumerate(paths):
        first = b * slots + len(path) - 1
        rows = [i for i, s in enumerate(full.row_slots) if first <= s < first + slots - delay]
        keep += rows
    ic = full.restrict_rows(keep)
    d_h0 = parallel_repeated([line(1, 1)] * m, [slots - delay] * m)
    curve = scale_rate(d_h0, m * slots, 1)
    return ProtocolRun(sched, ic, curve, tuple(paths), limit, condition)
