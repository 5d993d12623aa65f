"""Multi-antenna relay networks as directed graphs.

Every terminal is a super-node owning ``antennas`` small nodes; every edge
joins one antenna of one terminal to one antenna of another and carries its
own i.i.d. Rayleigh fading variable.  Min-cut and edge-disjoint paths are
computed on the antenna-level expansion, where antennas of one terminal are
tied together by uncapacitated internal links so that only inter-terminal
edges can be cut.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .poly import Poly, PolyMatrix

Port = tuple[str, int]

MAX_CUT_NODES = 20


class NetworkError(ValueError):
    """Malformed network description or invalid query."""


class CutEnumerationError(NetworkError):
    """Refusal to enumerate an exponential number of cuts."""


@dataclass(frozen=True)
class SuperNode:
    id: str
    antennas: int = 1
    role: str = "relay"  # source | relay | sink
    duplex: str = "full"  # full | half

    def __post_init__(self):
        if self.antennas < 1:
            raise NetworkError(f"node {self.id!r}: antennas must be >= 1")
        if self.role not in ("source", "relay", "sink"):
            raise NetworkError(f"node {self.id!r}: unknown role {self.role!r}")
        if self.duplex not in ("full", "half"):
            raise NetworkError(f"node {self.id!r}: unknown duplex mode {self.duplex!r}")


@dataclass(frozen=True)
class Edge:
    src: Port
    dst: Port
    var: str

    @property
    def tail(self) -> str:
        return self.src[0]

    @property
    def head(self) -> str:
        return self.dst[0]


@dataclass(frozen=True)
class Cut:
    source_side: frozenset[str]
    crossing_edges: tuple[int, ...]  # edge ids, ascending


@dataclass(frozen=True)
class FlowResult:
    """Max-flow outcome; ``value == 0`` means the sink is unreachable."""

    value: int
    paths: tuple[tuple[int, ...], ...]  # each path is a tuple of edge ids

    @property
    def disconnected(self) -> bool:
        return self.value == 0


@dataclass(frozen=True)
class ScheduleViolation:
    slot: int
    node: str
    reason: str


@dataclass(frozen=True)
class NetworkGraph:
    nodes: tuple[SuperNode, ...]
    edges: tuple[Edge, ...]
    _index: dict = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        by_id = {}
        for n in self.nodes:
            if n.id in by_id:
                raise NetworkError(f"duplicate node id {n.id!r}")
            by_id[n.id] = n
        seen_vars = set()
        out_edges = {n.id: [] for n in self.nodes}
        in_edges = {n.id: [] for n in self.nodes}
        for k, e in enumerate(self.edges):
            for node, ant in (e.src, e.dst):
                if node not in by_id:
                    raise NetworkError(f"edge {k}: unknown node {node!r}")
                if not 0 <= ant < by_id[node].antennas:
                    raise NetworkError(f"edge {k}: antenna {ant} out of range for {node!r}")
            if e.tail == e.head:
                raise NetworkError(f"edge {k}: self-loop on {e.tail!r}")
            if e.var in seen_vars:
                raise NetworkError(f"edge {k}: fading variable {e.var!r} reused")
            seen_vars.add(e.var)
            out_edges[e.tail].append(k)
            in_edges[e.head].append(k)
        index = {"by_id": by_id, "out": out_edges, "in": in_edges,
                 "var": {e.var: k for k, e in enumerate(self.edges)}}
        object.__setattr__(self, "_index", index)

    # lookups --------------------------------------------------------------
    def node(self, node_id: str) -> SuperNode:
        try:
            return self._index["by_id"][node_id]
        except KeyError:
            raise NetworkError(f"unknown node {node_id!r}") from None

    @property
    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def out_edges(self, node_id: str) -> list[int]:
        return self._index["out"][node_id]

    def in_edges(self, node_id: str) -> list[int]:
        return self._index["in"][node_id]

    def edge_by_var(self, var: str) -> int:
        return self._index["var"][var]

    def variables(self) -> list[str]:
        return [e.var for e in self.edges]

    def sources(self) -> list[str]:
        return [n.id for n in self.nodes if n.role == "source"]

    def sinks(self) -> list[str]:
        return [n.id for n in self.nodes if n.role == "sink"]

    def terminals(self, source: str | None = None, sink: str | None = None) -> tuple[str, str]:
        if source is None:
            srcs = self.sources()
            if len(srcs) != 1:
                raise NetworkError(f"expected exactly one source, found {len(srcs)}")
            source = srcs[0]
        if sink is None:
            snks = self.sinks()
            if len(snks) != 1:
                raise NetworkError(f"expected exactly one sink, found {len(snks)}")
            sink = snks[0]
        self.node(source)
        self.node(sink)
        if source == sink:
            raise NetworkError("source and sink coincide")
        return source, sink

    def is_single_antenna(self) -> bool:
        return all(n.antennas == 1 for n in self.nodes)

    def is_full_duplex(self) -> bool:
        return all(n.duplex == "full" for n in self.nodes)

    def super_adjacency(self) -> dict[str, set[str]]:
        adj = {n.id: set() for n in self.nodes}
        for e in self.edges:
            adj[e.tail].add(e.head)
        return adj

    def without_edges(self, edge_ids: Iterable[int]) -> "NetworkGraph":
        """Wireline-style pruning: the chosen edges are zeroed, i.e. removed."""
        drop = set(edge_ids)
        return NetworkGraph(self.nodes, [e for k, e in enumerate(self.edges) if k not in drop])

    # serialisation ------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n.id, "antennas": n.antennas, "role": n.role, "duplex": n.duplex}
                      for n in self.nodes],
            "edges": [{"from": list(e.src), "to": list(e.dst), "var": e.var} for e in self.edges],
        }


# ---------------------------------------------------------------------------
# construction helpers

def _port(x) -> Port:
    if isinstance(x, str):
        return (x, 0)
    node, ant = x
    return (str(node), int(ant))


def network_from_dict(data: dict) -> NetworkGraph:
    """Parse the JSON network schema; edge variables default to ``h0, h1, ...`` in file order."""
    try:
        nodes = [SuperNode(str(n["id"]), int(n.get("antennas", 1)), n.get("role", "relay"),
                           n.get("duplex", "full")) for n in data["nodes"]]
        edges: list[Edge] = []
        for spec in data.get("edges", []):
            src, dst = _port(spec["from"]), _port(spec["to"])
            pairs = [(src, dst)]
            if spec.get("bidirectional"):
                pairs.append((dst, src))
            for k, (a, b) in enumerate(pairs):
                var = spec.get("var")
                if var is None:
                    var = f"h{len(edges)}"
                elif k == 1:
                    var = f"{var}_rev"
                edges.append(Edge(a, b, str(var)))
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed network description: {exc!r}") from exc
    return NetworkGraph(nodes, edges)


def load_network(path: str | Path) -> NetworkGraph:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise NetworkError(f"{path}: invalid JSON ({exc})") from exc
    return network_from_dict(data)


def full_links(nodes: Sequence[SuperNode], pairs: Iterable[tuple[str, str]],
               prefix: str = "h") -> list[Edge]:
    """All antenna-to-antenna edges for each (tail, head) terminal pair."""
    ants = {n.id: n.antennas for n in nodes}
    edges = []
    for a, b in pairs:
        for i, j in product(range(ants[a]), range(ants[b])):
            edges.append(Edge((a, i), (b, j), f"{prefix}{len(edges)}"))
    return edges


def build_network(spec: Iterable[tuple[str, int, str]], pairs: Iterable[tuple[str, str]],
                  duplex: str = "full") -> NetworkGraph:
    """Shorthand: ``spec`` lists ``(id, antennas, role)``; ``pairs`` are fully connected."""
    nodes = [SuperNode(i, a, r, duplex) for i, a, r in spec]
    return NetworkGraph(nodes, full_links(nodes, pairs))


def mincut_figure_network() -> NetworkGraph:
    """Two-antenna source and sink, two three-antenna relays, full inter-stage links."""
    return build_network(
        [("S", 2, "source"), ("R1", 3, "relay"), ("R2", 3, "relay"), ("D", 2, "sink")],
        [("S", "R1"), ("S", "R2"), ("R1", "D"), ("R2", "D")],
    )


def chain_network(length: int, duplex: str = "full") -> NetworkGraph:
    """``s -> r1 -> ... -> t`` with ``length`` edges."""
    ids = ["s"] + [f"r{i}" for i in range(1, length)] + ["t"]
    spec = [(x, 1, "source" if k == 0 else "sink" if k == length else "relay")
            for k, x in enumerate(ids)]
    return build_network(spec, zip(ids, ids[1:]), duplex)


def diamond_network(direct: bool = False, duplex: str = "full") -> NetworkGraph:
    pairs = [("s", "r1"), ("s", "r2"), ("r1", "t"), ("r2", "t")]
    if direct:
        pairs.append(("s", "t"))
    return build_network([("s", 1, "source"), ("r1", 1, "relay"), ("r2", 1, "relay"),
                          ("t", 1, "sink")], pairs, duplex)


def random_dag(rng: np.random.Generator, n_nodes: int, max_antennas: int = 1,
               p_link: float = 0.5, p_antenna_edge: float = 1.0) -> NetworkGraph:
    """Random layered-order DAG: node 0 is the source, the last node the sink."""
    if n_nodes < 2:
        raise NetworkError("need at least two nodes")
    ids = ["s"] + [f"r{i}" for i in range(1, n_nodes - 1)] + ["t"]
    nodes = []
    for k, x in enumerate(ids):
        role = "source" if k == 0 else "sink" if k == n_nodes - 1 else "relay"
        nodes.append(SuperNode(x, int(rng.integers(1, max_antennas + 1)), role))
    edges = []
    for a in range(n_nodes):
        for b in range(a + 1, n_nodes):
            if rng.random() >= p_link:
                continue
            for i in range(nodes[a].antennas):
                for j in range(nodes[b].antennas):
                    if rng.random() < p_antenna_edge:
                        edges.append(Edge((ids[a], i), (ids[b], j), f"h{len(edges)}"))
    return NetworkGraph(nodes, edges)


# ---------------------------------------------------------------------------
# max-flow on the antenna expansion

class _FlowGraph:
    """Residual graph with arcs stored in insertion order for deterministic search."""

    def __init__(self):
        self.head: list[int] = []
        self.cap: list[int] = []
        self.adj: dict[int, list[int]] = {}

    def add(self, u: int, v: int, cap: int) -> int:
        a = len(self.head)
        self.head += [v, u]
        self.cap += [cap, 0]
        self.adj.setdefault(u, []).append(a)
        self.adj.setdefault(v, []).append(a + 1)
        return a

    def augment(self, s: int, t: int) -> bool:
        prev = {s: -1}
        queue = deque([s])
        while queue and t not in prev:
            u = queue.popleft()
            for a in self.adj.get(u, ()):
                v = self.head[a]
                if self.cap[a] > 0 and v not in prev:
                    prev[v] = a
                    queue.append(v)
        if t not in prev:
            return False
        v = t
        while v != s:
            a = prev[v]
            self.cap[a] -= 1
            self.cap[a ^ 1] += 1
            v = self.head[a ^ 1]
        return True


_INF = 1 << 30


def max_flow(net: NetworkGraph, source: str | None = None, sink: str | None = None) -> FlowResult:
    """Unit-capacity max-flow between terminals, decomposed into edge-disjoint paths.

    Augmenting paths are found by BFS with arcs visited in edge-id order, and
    the flow is decomposed greedily by lowest edge id, so results are
    reproducible.
    """
    source, sink = net.terminals(source, sink)
    vid: dict[Port, int] = {}
    for n in net.nodes:
        for a in range(n.antennas):
            vid[(n.id, a)] = len(vid)
    s_star, t_star = len(vid), len(vid) + 1
    g = _FlowGraph()
    edge_arc = []
    for e in net.edges:
        edge_arc.append(g.add(vid[e.src], vid[e.dst], 1))
    for n in net.nodes:
        for a in range(n.antennas):
            for b in range(n.antennas):
                if a != b:
                    g.add(vid[(n.id, a)], vid[(n.id, b)], _INF)
    for a in range(net.node(source).antennas):
        g.add(s_star, vid[(source, a)], _INF)
    for a in range(net.node(sink).antennas):
        g.add(vid[(sink, a)], t_star, _INF)
    value = 0
    while g.augment(s_star, t_star):
        value += 1
    used = {k for k, arc in enumerate(edge_arc) if g.cap[arc] == 0}
    return FlowResult(value, _decompose(net, used, source, sink, value))


def _decompose(net: NetworkGraph, used: set[int], source: str, sink: str,
               value: int) -> tuple[tuple[int, ...], ...]:
    used = set(used)
    paths = []
    for _ in range(value):
        path: list[int] = []
        pos = {source: 0}
        node = source
        while node != sink:
            k = min(e for e in net.out_edges(node) if e in used)
            path.append(k)
            node = net.edges[k].head
            if node in pos:
                # flow cycle: drop it from the residual flow and the partial path
                cut = pos[node]
                for c in path[cut:]:
                    used.discard(c)
                for c in path[cut:]:
                    pos.pop(net.edges[c].head, None)
                pos[node] = cut
                del path[cut:]
            else:
                pos[node] = len(path)
        used.difference_update(path)
        paths.append(tuple(path))
    return tuple(paths)


def min_cut_edges(net: NetworkGraph, source: str | None = None, sink: str | None = None) -> int:
    """Antenna-edge min-cut between the terminals; 0 signals a disconnected pair."""
    return max_flow(net, source, sink).value


def edge_disjoint_paths(net: NetworkGraph, source: str | None = None,
                        sink: str | None = None) -> list[tuple[int, ...]]:
    return list(max_flow(net, source, sink).paths)


def path_nodes(net: NetworkGraph, path: Sequence[int]) -> list[str]:
    """Super-node sequence visited by a path given as edge ids."""
    if not path:
        return []
    nodes = [net.edges[path[0]].tail]
    for k in path:
        e = net.edges[k]
        if e.tail != nodes[-1]:
            raise NetworkError(f"edge {k} does not continue the path at {nodes[-1]!r}")
        nodes.append(e.head)
    return nodes


# ---------------------------------------------------------------------------
# cuts

def enumerate_cuts(net: NetworkGraph, source: str | None = None, sink: str | None = None,
                   limit: int = MAX_CUT_NODES) -> Iterator[Cut]:
    """Every source/sink-separating partition of the super-nodes, exactly once."""
    source, sink = net.terminals(source, sink)
    if len(net.nodes) > limit:
        raise CutEnumerationError(
            f"exponential enumeration refused: {len(net.nodes)} nodes exceeds limit {limit}")
    middle = [n for n in net.node_ids if n not in (source, sink)]
    for mask in range(1 << len(middle)):
        side = {source} | {m for b, m in enumerate(middle) if mask >> b & 1}
        crossing = tuple(k for k, e in enumerate(net.edges)
                         if e.tail in side and e.head not in side)
        yield Cut(frozenset(side), crossing)


def cut_size(cut: Cut) -> int:
    return len(cut.crossing_edges)


def cut_transfer_pattern(net: NetworkGraph, cut: Cut) -> PolyMatrix:
    """Rows: receiving antennas of crossing edges; columns: transmitting antennas."""
    crossing = [net.edges[k] for k in cut.crossing_edges]
    for e in crossing:
        if e.tail not in cut.source_side or e.head in cut.source_side:
            raise NetworkError("edge does not cross the cut")
    rows = sorted({e.dst for e in crossing}, key=_port_key(net))
    cols = sorted({e.src for e in crossing}, key=_port_key(net))
    ri = {p: i for i, p in enumerate(rows)}
    ci = {p: j for j, p in enumerate(cols)}
    ent = {}
    for e in crossing:
        # parallel antenna edges between the same pair are not representable
        if (ri[e.dst], ci[e.src]) in ent:
            raise NetworkError(f"duplicate antenna link {e.src} -> {e.dst}")
        ent[(ri[e.dst], ci[e.src])] = Poly.var(e.var)
    return PolyMatrix(len(rows), len(cols), ent)


def cut_ports(net: NetworkGraph, cut: Cut) -> tuple[list[Port], list[Port]]:
    crossing = [net.edges[k] for k in cut.crossing_edges]
    key = _port_key(net)
    return (sorted({e.dst for e in crossing}, key=key), sorted({e.src for e in crossing}, key=key))


def _port_key(net: NetworkGraph):
    order = {n: i for i, n in enumerate(net.node_ids)}
    return lambda p: (order[p[0]], p[1])


# ---------------------------------------------------------------------------
# structure checks

def network_is_acyclic(net: NetworkGraph) -> bool:
    adj = net.super_adjacency()
    indeg = {n: 0 for n in adj}
    for u in adj:
        for v in adj[u]:
            indeg[v] += 1
    queue = deque(n for n, d in indeg.items() if d == 0)
    seen = 0
    while queue:
        u = queue.popleft()
        seen += 1
        for v in adj[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return seen == len(adj)


def find_cycle(net: NetworkGraph) -> list[str] | None:
    adj = {k: sorted(v) for k, v in net.super_adjacency().items()}
    color = {n: 0 for n in adj}
    stack: list[str] = []

    def dfs(u):
        color[u] = 1
        stack.append(u)
        for v in adj[u]:
            if color[v] == 1:
                return stack[stack.index(v):] + [v]
            if color[v] == 0:
                found = dfs(v)
                if found:
                    return found
        color[u] = 2
        stack.pop()
        return None

    for n in adj:
        if color[n] == 0:
            found = dfs(n)
            if found:
                return found
    return None


def path_has_shortcut(net: NetworkGraph, path: Sequence) -> bool:
    """True if one edge of ``net`` jumps forward over at least one node of ``path``.

    ``path`` is either a sequence of node ids or of edge ids (ints).
    """
    nodes = path_nodes(net, path) if path and isinstance(path[0], (int, np.integer)) else list(path)
    adj = net.super_adjacency()
    for a, b in zip(nodes, nodes[1:]):
        if b not in adj.get(a, ()):
            raise NetworkError(f"path step {a!r} -> {b!r} is not an edge of the network")
    pos = {n: i for i, n in enumerate(nodes)}
    for e in net.edges:
        if e.tail in pos and e.head in pos and pos[e.head] - pos[e.tail] >= 2:
            return True
    return False


def slot_roles(net: NetworkGraph, live: Iterable[int]) -> tuple[set[Port], set[Port]]:
    """Transmitting and listening antennas implied by a set of live edges."""
    tx, rx = set(), set()
    for k in live:
        e = net.edges[k]
        tx.add(e.src)
        rx.add(e.dst)
    return tx, rx


def validate_schedule(net: NetworkGraph, slots: Sequence[Iterable[int]]) -> list[ScheduleViolation]:
    """Half-duplex check; an empty list means the schedule is admissible."""
    out = []
    for t, live in enumerate(slots):
        live = list(live)
        for k in live:
            if not 0 <= k < len(net.edges):
                raise NetworkError(f"slot {t}: unknown edge id {k}")
        tx, rx = slot_roles(net, live)
        tx_nodes = {p[0] for p in tx}
        rx_nodes = {p[0] for p in rx}
        for n in sorted(tx_nodes & rx_nodes):
            if net.node(n).duplex == "half":
                out.append(ScheduleViolation(t, n, "half-duplex node transmits and listens"))
    return out
