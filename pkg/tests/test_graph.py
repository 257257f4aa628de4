import math
import warnings

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dimreg import datasets
from dimreg.graph import (EdgeListParseError, EdgeSplit, Graph, average_clustering_coefficient,
                          connected_erdos_renyi, generate_erdos_renyi, generate_sbm, load_edge_list,
                          local_clustering, sbm_blocks, split_edges, write_edge_list)


def write(tmp_path, text, name="g.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


# --- loading ---------------------------------------------------------------

def test_load_triangle(tmp_path):
    g = load_edge_list(write(tmp_path, "0 1\n1 2\n2 0"))
    assert (g.n, g.m) == (3, 3)


def test_load_merges_reversed_and_drops_self_loops(tmp_path):
    with pytest.warns(UserWarning, match="dropped 1 self-loop"):
        g = load_edge_list(write(tmp_path, "0 1\n1 0\n0 0"))
    assert (g.n, g.m) == (2, 1)


def test_load_reindexes_densely_and_keeps_labels(tmp_path):
    g = load_edge_list(write(tmp_path, "# comment\n\n10 30 0.5 extra\n30 20\n"))
    assert g.n == 3
    assert list(g.labels) == [10, 20, 30]
    assert g.has_edge(0, 2) and g.has_edge(1, 2) and not g.has_edge(0, 1)


def test_malformed_line_reports_line_number(tmp_path):
    with pytest.raises(EdgeListParseError) as err:
        load_edge_list(write(tmp_path, "0 1\n# ok\n1 x\n"))
    assert err.value.lineno == 3
    with pytest.raises(EdgeListParseError):
        load_edge_list(write(tmp_path, "0 1\n7\n"))


def test_empty_graph_is_an_error(tmp_path):
    with pytest.raises(ValueError):
        load_edge_list(write(tmp_path, "# nothing\n"))
    with pytest.raises(ValueError), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        load_edge_list(write(tmp_path, "3 3\n"))


def test_cites_loader_accepts_string_ids(tmp_path):
    g = datasets.load_cites(write(tmp_path, "a b\nb c\nc a\nb a\n", "x.cites"))
    assert (g.n, g.m) == (3, 3)


@pytest.mark.skipif(not datasets.available("cora"), reason="Cora not present in $DIMREG_DATA")
def test_cora_size_and_clustering():
    g = datasets.load_dataset("cora")
    # compared at two significant figures
    assert float(f"{g.n:.2g}") == 2.7e3
    assert float(f"{g.m:.2g}") == 1.2e4
    assert abs(average_clustering_coefficient(g) - 0.24) <= 0.01


# --- invariants --------------------------------------------------------------

edge_lists = st.integers(2, 30).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=80)))


@given(edge_lists)
def test_graph_invariants(data):
    n, pairs = data
    pairs = [(u, v) for u, v in pairs if u != v]
    g = Graph.from_edges(n, pairs)
    expected = {(min(u, v), max(u, v)) for u, v in pairs}
    assert g.m == len(expected)
    assert {tuple(e) for e in g.edges.tolist()} == expected
    assert g.degrees.sum() == 2 * g.m
    assert np.all(g.edges[:, 0] < g.edges[:, 1]) and (g.m == 0 or g.edges.max() < n)
    for u, v in pairs:
        assert g.has_edge(u, v) and g.has_edge(v, u)
        assert u in g.neighbors(v)
    assert all(g.degree(v) == len(g.neighbors(v)) for v in range(n))


def test_self_loops_rejected_by_constructor():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 1)])


# --- generators --------------------------------------------------------------

def test_sbm_degenerate_probabilities_give_two_cliques():
    g = generate_sbm(4, 2, 1.0, 0.0, seed=0)
    assert g.m == 2
    assert {tuple(e) for e in g.edges.tolist()} == {(0, 1), (2, 3)}


def test_sbm_rejects_more_blocks_than_nodes():
    with pytest.raises(ValueError):
        generate_sbm(2, 3, 0.5, 0.5, seed=0)


def test_sbm_remainder_goes_to_last_block():
    assert list(sbm_blocks(7, 3)) == [0, 0, 1, 1, 2, 2, 2]


def test_erdos_renyi_extremes():
    assert generate_erdos_renyi(5, 0.0, 1).m == 0
    assert generate_erdos_renyi(5, 1.0, 1).m == 10


def test_sbm_with_equal_probabilities_matches_binomial():
    n, p = 200, 0.05
    pairs = n * (n - 1) / 2
    mean, sd = p * pairs, math.sqrt(pairs * p * (1 - p))
    counts = np.array([generate_sbm(n, 2, p, p, seed=s).m for s in range(20)])
    assert np.all(np.abs(counts - mean) <= 5 * sd)
    assert abs(counts.mean() - mean) <= 5 * sd / math.sqrt(len(counts))


def test_erdos_renyi_mean_edge_count():
    counts = np.array([generate_erdos_renyi(100, 0.05, s).m for s in range(50)])
    sd = math.sqrt(4950 * 0.05 * 0.95)
    assert abs(counts.mean() - 247.5) <= 5 * sd / math.sqrt(len(counts))


def test_single_block_sbm_is_erdos_renyi():
    a = generate_sbm(100, 1, 0.1, 0.1, seed=3)
    b = generate_erdos_renyi(100, 0.1, seed=3)
    assert np.array_equal(a.edges, b.edges)


def test_generators_are_deterministic():
    assert np.array_equal(generate_sbm(60, 3, 0.3, 0.05, 9).edges, generate_sbm(60, 3, 0.3, 0.05, 9).edges)


def test_connected_resampling():
    g, attempt = connected_erdos_renyi(100, 0.05, seed=0)
    assert g.is_connected()
    assert nx.is_connected(nx.Graph(g.edges.tolist())) and len(nx.Graph(g.edges.tolist())) == 100
    assert attempt >= 0


# --- clustering ----------------------------------------------------------------

def test_clustering_triangle_and_star():
    assert average_clustering_coefficient(Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])) == 1.0
    assert average_clustering_coefficient(Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])) == 0.0


@given(edge_lists)
def test_clustering_matches_networkx(data):
    n, pairs = data
    g = Graph.from_edges(n, [(u, v) for u, v in pairs if u != v])
    ref = nx.Graph()
    ref.add_nodes_from(range(n))
    ref.add_edges_from(g.edges.tolist())
    assert np.allclose(local_clustering(g), [nx.clustering(ref, v) for v in range(n)])
    assert math.isclose(average_clustering_coefficient(g), nx.average_clustering(ref), abs_tol=1e-12)


# --- splits ---------------------------------------------------------------------

def test_split_sizes_follow_floor_rule():
    g = Graph.from_edges(10, [(i, (i + 1) % 10) for i in range(10)])
    s = split_edges(g, (0.7, 0.1, 0.2), seed=0)
    assert (len(s.train_edges), len(s.validation_edges), len(s.test_edges)) == (7, 1, 2)


def test_split_of_complete_graph_fails():
    k5 = generate_erdos_renyi(5, 1.0, 0)
    with pytest.raises(ValueError, match="too dense"):
        split_edges(k5)


def test_split_is_deterministic():
    g = generate_erdos_renyi(80, 0.1, 4)
    a, b = split_edges(g, seed=7), split_edges(g, seed=7)
    for attr in EdgeSplit.SUFFIXES:
        assert np.array_equal(getattr(a, attr), getattr(b, attr))


def test_split_rejects_bad_ratios():
    g = generate_erdos_renyi(30, 0.3, 0)
    with pytest.raises(ValueError):
        split_edges(g, (0.5, 0.2, 0.2))


@given(st.integers(8, 40), st.floats(0.05, 0.6), st.integers(0, 10_000))
def test_split_partitions_edges(n, p, seed):
    g = generate_erdos_renyi(n, p, seed)
    if g.m < 3:
        return
    try:
        s = split_edges(g, seed=seed)
    except ValueError as exc:
        assert "too dense" in str(exc)
        return
    parts = [s.train_edges, s.validation_edges, s.test_edges]
    keys = [set(map(tuple, np.sort(e, axis=1).tolist())) for e in parts]
    assert sum(len(k) for k in keys) == g.m
    assert set.union(*keys) == set(map(tuple, g.edges.tolist()))
    assert not (keys[0] & keys[1] or keys[0] & keys[2] or keys[1] & keys[2])
    for neg, pos in ((s.negative_test_edges, s.test_edges), (s.negative_validation_edges, s.validation_edges)):
        assert len(neg) == len(pos)
        assert not np.any(g.has_edges(neg[:, 0], neg[:, 1]))
        assert np.all(neg[:, 0] != neg[:, 1])
        assert len({tuple(sorted(e)) for e in neg.tolist()}) == len(neg)
    a = {tuple(sorted(e)) for e in s.negative_test_edges.tolist()}
    b = {tuple(sorted(e)) for e in s.negative_validation_edges.tolist()}
    assert not a & b


def test_split_round_trip(tmp_path):
    g = generate_erdos_renyi(50, 0.2, 1)
    s = split_edges(g, seed=2)
    s.save(tmp_path / "split")
    t = EdgeSplit.load(tmp_path / "split")
    assert t.n == s.n
    for attr in EdgeSplit.SUFFIXES:
        assert np.array_equal(getattr(t, attr), getattr(s, attr))


def test_write_edge_list_round_trip(tmp_path):
    g = generate_erdos_renyi(20, 0.3, 5)
    write_edge_list(tmp_path / "e.txt", g.edges, header="n=20")
    h = load_edge_list(tmp_path / "e.txt")
    assert h.m == g.m
