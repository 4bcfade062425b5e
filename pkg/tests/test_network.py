import io
import itertools
import json
import random

import networkx as nx
import pytest

from skyswarm.errors import InvalidParameter, ParseError, PathBudgetExceeded, UnknownNode, ValidationError
from skyswarm.network import (
    SkywayNetwork,
    enumerate_simple_paths,
    generate_random_network,
    hop_levels,
    load_network,
    neighbors_within_lookahead,
    read_network,
    save_network,
    shortest_path,
    shortest_paths_from,
    write_network,
)


def triangle():
    return SkywayNetwork([1, 2, 3], [(0, 1, 100.0), (1, 2, 100.0), (0, 2, 250.0)])


def complete(n, km=100.0):
    return SkywayNetwork([1] * n, [(a, b, km) for a, b in itertools.combinations(range(n), 2)])


def to_nx(net):
    g = nx.Graph()
    g.add_nodes_from(net.nodes())
    for a, b, km in net.edges:
        g.add_edge(a, b, weight=km)
    return g


# --- construction ---------------------------------------------------------

def test_basic_accessors():
    net = triangle()
    assert net.node_count == 3
    assert net.pad_count(2) == 3
    assert net.distance(2, 1) == 100.0
    assert net.neighbors(0) == {1: 100.0, 2: 250.0}
    assert net.path_length((0, 1, 2)) == 200.0
    assert not SkywayNetwork([1, 1], [(0, 1, 5.0)]).has_edge(0, 0)


@pytest.mark.parametrize("pads, edges, invariant", [
    ([], [], "non-empty"),
    ([0, 1], [(0, 1, 1.0)], "pads>=1"),
    ([1, 1], [(0, 5, 1.0)], "known-endpoint"),
    ([1, 1], [(0, 0, 1.0), (0, 1, 1.0)], "no-self-loop"),
    ([1, 1], [(0, 1, 1.0), (1, 0, 2.0)], "unique-edge"),
    ([1, 1], [(0, 1, 0.0)], "positive-distance"),
    ([1, 1, 1], [(0, 1, 1.0)], "connected"),
])
def test_construction_invariants(pads, edges, invariant):
    with pytest.raises(ValidationError) as exc:
        SkywayNetwork(pads, edges)
    assert exc.value.invariant == invariant


def test_unknown_node():
    with pytest.raises(UnknownNode):
        triangle().distance(0, 7)
    with pytest.raises(UnknownNode):
        shortest_path(triangle(), 0, 9)


# --- shortest paths -------------------------------------------------------

def test_triangle_prefers_two_hops():
    assert shortest_path(triangle(), 0, 2) == ((0, 1, 2), 200.0)


def test_tie_break_is_lexicographic():
    # two 2-hop routes of equal length; the smaller middle node wins
    net = SkywayNetwork([1] * 4, [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)])
    assert shortest_path(net, 0, 3)[0] == (0, 1, 3)
    assert shortest_path(net, 3, 0)[0] == (3, 1, 0)


@pytest.mark.parametrize("seed", range(5))
def test_dijkstra_matches_networkx(seed):
    net = generate_random_network(20, 0.2, (1, 4), (50, 400), seed)
    g = to_nx(net)
    for src in (0, 7, 19):
        ours = shortest_paths_from(net, src)
        ref = nx.single_source_dijkstra_path_length(g, src)
        assert set(ours) == set(ref)
        for node, (km, path) in ours.items():
            assert km == pytest.approx(ref[node], rel=1e-12)
            assert net.path_length(path) == pytest.approx(km, rel=1e-12)


def test_blocked_nodes_are_removed():
    net = triangle()
    got = shortest_paths_from(net, 0, blocked={1})
    assert got[2] == (250.0, (0, 2))
    assert 1 not in got


# --- lookahead ------------------------------------------------------------

def line(n):
    return SkywayNetwork([1] * n, [(i, i + 1, 10.0) for i in range(n - 1)])


def test_lookahead_zero_is_direct_neighbours():
    assert neighbors_within_lookahead(line(6), 2, 0) == {1: 10.0, 3: 10.0}


def test_lookahead_counts_extra_levels():
    got = neighbors_within_lookahead(line(6), 0, 2)
    assert got == {1: 10.0, 2: 20.0, 3: 30.0}


@pytest.mark.parametrize("seed", range(4))
def test_hop_levels_match_bfs(seed):
    net = generate_random_network(15, 0.25, (1, 4), (50, 400), seed)
    ref = nx.single_source_shortest_path_length(to_nx(net), 3, cutoff=3)
    assert hop_levels(net, 3, 3) == ref


def test_lookahead_rejects_negative():
    with pytest.raises(InvalidParameter):
        neighbors_within_lookahead(line(3), 0, -1)


# --- simple paths ---------------------------------------------------------

def test_k5_has_16_paths_between_two_nodes():
    # 1 + 3 + 3*2 + 3*2*1
    paths = enumerate_simple_paths(complete(5), 0, 4, 100)
    assert len(paths) == 16
    assert len(set(paths)) == 16


@pytest.mark.parametrize("seed", range(4))
def test_simple_paths_match_networkx(seed):
    net = generate_random_network(10, 0.35, (1, 4), (50, 400), seed)
    ours = set(enumerate_simple_paths(net, 0, 9, 10**6))
    ref = {tuple(p) for p in nx.all_simple_paths(to_nx(net), 0, 9)}
    assert ours == ref


def test_path_budget_refuses():
    with pytest.raises(PathBudgetExceeded) as exc:
        enumerate_simple_paths(complete(6), 0, 5, 10)
    assert len(exc.value.paths) == 10
    assert exc.value.budget == 10


# --- serialisation --------------------------------------------------------

def test_round_trip(tmp_path):
    net = generate_random_network(12, 0.3, (1, 4), (50, 400), 3)
    assert load_network(save_network(net)) == net
    write_network(net, tmp_path / "n.json")
    assert read_network(tmp_path / "n.json") == net
    assert load_network(io.BytesIO(save_network(net))) == net


def test_parse_error_names_field():
    doc = json.loads(save_network(triangle()))
    doc["nodes"][2]["pads"] = "many"
    with pytest.raises(ParseError) as exc:
        load_network(json.dumps(doc))
    assert exc.value.field == "nodes[2].pads"


def test_parse_error_unknown_key():
    doc = json.loads(save_network(triangle()))
    doc["colour"] = "red"
    with pytest.raises(ParseError):
        load_network(json.dumps(doc))


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as exc:
        load_network('{\n"nodes": [\n,]}')
    assert exc.value.line == 3


# --- generator ------------------------------------------------------------

def test_generator_deterministic_and_in_range():
    a = generate_random_network(30, 0.1, (1, 4), (50, 400), 11)
    b = generate_random_network(30, 0.1, (1, 4), (50, 400), 11)
    assert a == b
    assert all(1 <= p <= 4 for p in a.pads)
    assert all(50 <= km <= 400 for _, _, km in a.edges)
    m = len(a.edges)
    assert 2 * m / (30 * 29) >= 0.1
    assert nx.is_connected(to_nx(a))


def test_generator_rejects_bad_density():
    with pytest.raises(InvalidParameter):
        generate_random_network(5, 1.5, (1, 4), (50, 400), 0)


def test_generator_seeds_differ():
    seeds = {save_network(generate_random_network(10, 0.3, (1, 4), (50, 400), s)) for s in range(5)}
    assert len(seeds) == 5


def test_random_network_paths_are_symmetric():
    net = generate_random_network(12, 0.3, (1, 4), (50, 400), random.Random(1).randint(0, 99))
    for a, b in [(0, 5), (3, 11)]:
        assert shortest_path(net, a, b)[1] == pytest.approx(shortest_path(net, b, a)[1], rel=1e-12)
