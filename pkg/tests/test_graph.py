import numpy as np
import pytest
from hypothesis import given, settings

from conftest import graphs, permutations
from expressivity import wl
from expressivity.graph import (Graph, GraphCollection, GraphFormatError, NodeFeatures, RootedGraph,
                                cycle_graph, dump_edge_list, load_edge_list, load_features, max_degree,
                                path_graph, star_graph)


def test_path_from_text():
    g = load_edge_list("0 1\n1 2")
    assert g.n == 3
    assert g.degrees.tolist() == [1, 2, 1]


def test_hexagon_from_text():
    g = load_edge_list("0 1\n1 2\n2 3\n3 4\n4 5\n5 0\n")
    assert g.n == 6 and g.degrees.tolist() == [2] * 6
    assert g == cycle_graph(6)


def test_comments_and_blank_lines():
    g = load_edge_list("# header\n\n0 1  # trailing\n\n1 2\n")
    assert g.num_edges == 2


@pytest.mark.parametrize("text, needle", [
    ("0 0", "self-loop"),
    ("0 1\n1 0", "duplicate"),
    ("0 1\n1 x", "non-integer"),
    ("0 1 2", "two fields"),
    ("0 -1", "negative"),
])
def test_rejects_bad_input(text, needle):
    with pytest.raises(GraphFormatError, match=needle):
        load_edge_list(text)


def test_error_carries_line_number():
    with pytest.raises(GraphFormatError) as info:
        load_edge_list("0 1\n# c\n2 2\n")
    assert info.value.line == 3
    assert "line 3" in str(info.value)


def test_declared_n():
    assert load_edge_list("0 1", n=4).n == 4
    with pytest.raises(GraphFormatError, match="declared"):
        load_edge_list("0 5", n=3)


def test_relabel():
    g = load_edge_list("a b\nb c\n", relabel=True)
    assert g.n == 3 and g.degrees.tolist() == [1, 2, 1]


def test_from_edges_validation():
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 2)])
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 1), (1, 0)])


def test_features_defaults_and_errors():
    f = load_features("", 3)
    assert f.labels.tolist() == [0, 0, 0] and f.alphabet == (0,)
    f = load_features("0 1\n2 1", 3)
    assert f.labels.tolist() == [1, 0, 1] and f.alphabet == (0, 1)
    with pytest.raises(GraphFormatError, match="outside"):
        load_features("5 0", 3)
    with pytest.raises(GraphFormatError, match="negative"):
        load_features("0 -2", 3)


def test_max_degree_examples():
    assert max_degree(path_graph(3)) == 2
    assert max_degree(cycle_graph(6)) == 2
    assert max_degree(star_graph(4)) == 4
    assert max_degree(Graph.from_edges(0, [])) == 0


def test_rooted_graph_bounds():
    with pytest.raises(ValueError):
        RootedGraph(path_graph(3), 3)


def test_collection_invariants():
    c = GraphCollection()
    c.add("a", path_graph(3))
    with pytest.raises(ValueError):
        c.add("a", path_graph(2))
    with pytest.raises(ValueError):
        c.add("b", path_graph(2), NodeFeatures.uniform(3))


def test_one_hot():
    f = NodeFeatures.from_labels([2, 0], alphabet=[1])
    assert f.alphabet == (0, 1, 2)
    assert f.one_hot().tolist() == [[0, 0, 1], [1, 0, 0]]


@given(graphs())
def test_structure_invariants(g):
    adj = {u: set(g.neighbors(u).tolist()) for u in range(g.n)}
    for u in range(g.n):
        nb = g.neighbors(u).tolist()
        assert nb == sorted(set(nb)) and u not in nb
        assert all(u in adj[v] for v in nb)
        assert g.degrees[u] == len(nb)
    assert int(g.degrees.sum()) == 2 * g.num_edges


@given(graphs())
def test_round_trip(g):
    assert load_edge_list(dump_edge_list(g), n=g.n) == g


@settings(max_examples=50)
@given(graphs().flatmap(lambda g: permutations(g.n).map(lambda p: (g, p))))
def test_permutation_keeps_degrees_and_wl(gp):
    g, perm = gp
    h = g.permute(perm)
    assert sorted(g.degrees.tolist()) == sorted(h.degrees.tolist())
    tables = wl.ColorTables()
    a, b = wl.refine(g, None, 3, tables), wl.refine(h, None, 3, tables)
    assert a.histogram(3) == b.histogram(3)
    # node i of g corresponds to perm[i] of h
    assert a.at(3).tolist() == b.at(3)[np.asarray(perm, dtype=int)].tolist()
