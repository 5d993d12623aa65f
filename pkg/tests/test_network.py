import itertools
import json
from pathlib import Path

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from dmtlab.network import (CutEnumerationError, Edge, NetworkError, NetworkGraph, SuperNode,
                            build_network, chain_network, cut_transfer_pattern, diamond_network,
                            edge_disjoint_paths, enumerate_cuts, find_cycle, load_network,
                            max_flow, min_cut_edges, mincut_figure_network, network_from_dict,
                            network_is_acyclic, path_has_shortcut, path_nodes, random_dag,
                            validate_schedule)
from dmtlab.poly import Poly

NETS = Path(__file__).resolve().parent.parent / "networks"


def nx_min_cut(net):
    """Independent oracle: networkx max-flow on the antenna expansion."""
    g = nx.DiGraph()
    for n in net.nodes:
        ants = [(n.id, a) for a in range(n.antennas)]
        for u, v in itertools.permutations(ants, 2):
            g.add_edge(u, v)  # no capacity attribute = infinite
    for e in net.edges:
        g.add_edge(e.src, e.dst, capacity=1)
    src = [n for n in net.nodes if n.role == "source"][0]
    snk = [n for n in net.nodes if n.role == "sink"][0]
    for a in range(src.antennas):
        g.add_edge("SRC", (src.id, a))
    for a in range(snk.antennas):
        g.add_edge((snk.id, a), "SNK")
    return nx.maximum_flow_value(g, "SRC", "SNK")


def brute_cut(net):
    """Minimum crossing-edge count over all partitions, enumerated directly."""
    src = [n.id for n in net.nodes if n.role == "source"][0]
    snk = [n.id for n in net.nodes if n.role == "sink"][0]
    mid = [n.id for n in net.nodes if n.id not in (src, snk)]
    best = None
    for k in range(len(mid) + 1):
        for side in itertools.combinations(mid, k):
            s = {src, *side}
            c = sum(1 for e in net.edges if e.tail in s and e.head not in s)
            best = c if best is None else min(best, c)
    return best


dags = st.builds(lambda seed, n, a, p: random_dag(np.random.default_rng(seed), n, a, p),
                 st.integers(0, 10 ** 6), st.integers(2, 8), st.integers(1, 3),
                 st.floats(0.2, 0.9))


# -- examples ---------------------------------------------------------------

def test_one_edge():
    net = chain_network(1)
    assert min_cut_edges(net) == 1
    assert edge_disjoint_paths(net) == [(0,)]


def test_mincut_figure_network():
    net = mincut_figure_network()
    assert min_cut_edges(net) == 12
    paths = edge_disjoint_paths(net)
    assert len(paths) == 12
    used = [k for p in paths for k in p]
    assert len(used) == len(set(used))


def test_chain_path():
    net = chain_network(2)
    (path,) = edge_disjoint_paths(net)
    assert path_nodes(net, path) == ["s", "r1", "t"]


def test_diamond_paths():
    paths = edge_disjoint_paths(diamond_network())
    assert len(paths) == 2
    assert {tuple(path_nodes(diamond_network(), p)) for p in paths} == {
        ("s", "r1", "t"), ("s", "r2", "t")}


def test_disconnected_reports_zero():
    net = load_network(NETS / "disconnected.json")
    res = max_flow(net)
    assert res.value == 0 and res.disconnected and res.paths == ()


def test_random_8_node_dag_matches_enumeration():
    net = random_dag(np.random.default_rng(8), 8, 2, 0.5)
    assert min_cut_edges(net) == brute_cut(net)
    assert len(list(enumerate_cuts(net))) == 2 ** 6


def test_cut_counts():
    assert len(list(enumerate_cuts(chain_network(2)))) == 2
    assert len(list(enumerate_cuts(diamond_network()))) == 4
    for n in range(1, 6):
        assert len(list(enumerate_cuts(chain_network(n + 1)))) == 2 ** n


def test_cut_enumeration_refuses_large():
    net = chain_network(25)
    with pytest.raises(CutEnumerationError, match="exponential"):
        list(enumerate_cuts(net))


def test_cut_patterns():
    net = chain_network(1)
    (cut,) = list(enumerate_cuts(net))
    pat = cut_transfer_pattern(net, cut)
    assert pat.shape == (1, 1) and pat[0, 0] == Poly.var("h0")
    net = build_network([("s", 2, "source"), ("t", 2, "sink")], [("s", "t")])
    pat = cut_transfer_pattern(net, next(enumerate_cuts(net)))
    assert pat.shape == (2, 2)
    assert len(pat.variables()) == 4


def test_mincut_figure_omega1_pattern():
    # the source-side cut {S}: 2 tx antennas, 6 relay rx antennas, all 12 links cross
    net = mincut_figure_network()
    cut = next(c for c in enumerate_cuts(net) if c.source_side == {"S"})
    pat = cut_transfer_pattern(net, cut)
    assert pat.shape == (6, 2)
    assert len(pat.entries) == 12
    assert len(cut.crossing_edges) == min_cut_edges(net)


def test_shortcut_and_cycle():
    net = build_network([("s", 1, "source"), ("a", 1, "relay"), ("b", 1, "relay"),
                         ("t", 1, "sink")], [("s", "a"), ("a", "b"), ("b", "t"), ("s", "b")])
    assert path_has_shortcut(net, ["s", "a", "b", "t"])
    assert not path_has_shortcut(chain_network(2), ["s", "r1", "t"])
    with pytest.raises(NetworkError):
        path_has_shortcut(chain_network(2), ["s", "t"])
    assert network_is_acyclic(net)
    cyc = build_network([("s", 1, "source"), ("a", 1, "relay"), ("t", 1, "sink")],
                        [("s", "a"), ("a", "t"), ("t", "s")])
    assert not network_is_acyclic(cyc)
    assert find_cycle(cyc)[0] == find_cycle(cyc)[-1]


def test_validate_schedule():
    full = chain_network(2)
    assert validate_schedule(full, [{0, 1}, {0, 1}]) == []
    half = chain_network(2, duplex="half")
    bad = validate_schedule(half, [{0}, {0, 1}])
    assert [(v.slot, v.node) for v in bad] == [(1, "r1")]
    one_at_a_time = [{k} for p in edge_disjoint_paths(mincut_figure_network()) for k in p]
    assert validate_schedule(mincut_figure_network(), one_at_a_time) == []


def test_json_schema_and_bidirectional(tmp_path):
    data = {"nodes": [{"id": "s", "antennas": 2, "role": "source"},
                      {"id": "t", "role": "sink", "duplex": "half"}],
            "edges": [{"from": ["s", 0], "to": ["t", 0]},
                      {"from": ["s", 1], "to": ["t", 0], "bidirectional": True}]}
    net = network_from_dict(data)
    assert [e.var for e in net.edges] == ["h0", "h1", "h2"]
    assert net.edges[2].src == ("t", 0) and net.edges[2].dst == ("s", 1)
    path = tmp_path / "n.json"
    path.write_text(json.dumps(data))
    assert load_network(path).edges == net.edges
    path.write_text("{not json")
    with pytest.raises(NetworkError):
        load_network(path)


def test_invalid_networks():
    with pytest.raises(NetworkError):
        NetworkGraph([SuperNode("s", 1, "source")], [Edge(("s", 0), ("x", 0), "h")])
    with pytest.raises(NetworkError):
        SuperNode("s", 0)
    with pytest.raises(NetworkError):
        NetworkGraph([SuperNode("s"), SuperNode("t")],
                     [Edge(("s", 0), ("t", 0), "h"), Edge(("t", 0), ("s", 0), "h")])


@pytest.mark.parametrize("name", sorted(p.name for p in NETS.glob("*.json")))
def test_shipped_networks_load(name):
    net = load_network(NETS / name)
    assert min_cut_edges(net) == nx_min_cut(net)


# -- properties -------------------------------------------------------------

@given(dags)
def test_menger(net):
    flow = max_flow(net)
    assert flow.value == len(flow.paths) == nx_min_cut(net)
    used = [k for p in flow.paths for k in p]
    assert len(used) == len(set(used))
    for p in flow.paths:
        nodes = path_nodes(net, p)
        assert nodes[0] == "s" and nodes[-1] == "t"


@given(dags)
def test_min_cut_equals_enumeration(net):
    assert min_cut_edges(net) == brute_cut(net)
    assert min_cut_edges(net) == min(len(c.crossing_edges) for c in enumerate_cuts(net))


@given(dags)
def test_pattern_dimensions(net):
    for cut in enumerate_cuts(net):
        pat = cut_transfer_pattern(net, cut)
        crossing = [net.edges[k] for k in cut.crossing_edges]
        assert pat.rows == len({e.dst for e in crossing})
        assert pat.cols == len({e.src for e in crossing})
        names = [v for p in pat.entries.values() for v in p.variables()]
        assert len(names) == len(set(names)) == len(crossing)


@given(dags, st.data())
def test_wireline_zeroing(net, data):
    if not net.edges:
        return
    drop = set(data.draw(st.lists(st.integers(0, len(net.edges) - 1), max_size=4)))
    pruned = net.without_edges(drop)
    dropped_vars = {net.edges[k].var for k in drop}
    for cut in enumerate_cuts(pruned):
        full_cut = next(c for c in enumerate_cuts(net) if c.source_side == cut.source_side)
        full_vars = {net.edges[k].var for k in full_cut.crossing_edges}
        kept = {v for p in cut_transfer_pattern(pruned, cut).entries.values()
                for v in p.variables()} if cut.crossing_edges else set()
        assert kept == full_vars - dropped_vars
