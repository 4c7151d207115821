import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphdiff.graphs import (
    Graph,
    GraphBatch,
    GraphFormatError,
    degree_sequence,
    edge_index,
    edge_pair,
    format_graphs,
    is_connected,
    pair_count,
    pair_indices,
    parse_graphs,
    to_dot,
)


def test_edge_index_examples():
    assert edge_index(0, 1, 4) == 0
    # oracle: position in the row-major enumeration of all pairs
    pairs = list(itertools.combinations(range(4), 2))
    assert edge_index(2, 3, 4) == pairs.index((2, 3)) == 5
    assert edge_index(0, 3, 4) == pairs.index((0, 3)) == 2


@pytest.mark.parametrize("n", [2, 3, 7, 23, 50])
def test_edge_index_bijection(n):
    seen = set()
    for k, (i, j) in enumerate(itertools.combinations(range(n), 2)):
        assert edge_index(i, j, n) == k
        assert edge_pair(k, n) == (i, j)
        seen.add(k)
    assert seen == set(range(pair_count(n)))


def test_edge_index_matches_pair_indices_table():
    for n in (2, 5, 12):
        table = pair_indices(n)
        for k, (i, j) in enumerate(table):
            assert edge_index(int(i), int(j), n) == k


def test_edge_index_rejects_bad_pairs():
    with pytest.raises(IndexError):
        edge_index(1, 1, 4)
    with pytest.raises(IndexError):
        edge_index(2, 1, 4)
    with pytest.raises(IndexError):
        edge_index(0, 4, 4)
    with pytest.raises(IndexError):
        edge_pair(6, 4)


def test_graph_construction_and_queries():
    g = Graph.from_edges(4, [(1, 0), (2, 3)])
    assert g.edge_count == 2
    assert g.has_edge(0, 1) and g.has_edge(1, 0)
    assert not g.has_edge(0, 0)
    assert list(g.edges()) == [(0, 1), (2, 3)]
    a = g.adjacency()
    assert np.array_equal(a, a.T)
    assert np.all(np.diag(a) == 0)
    assert Graph.from_adjacency(a) == g
    assert Graph.from_edge_array(4, g.edge_array()) == g


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(0)
    with pytest.raises(ValueError):
        Graph(2, bits=2)  # only one pair exists
    with pytest.raises(IndexError):
        Graph.from_edges(3, [(0, 3)])


def test_graph_is_hashable_value_type():
    a = Graph.from_edges(3, [(0, 1)])
    b = Graph.from_edges(3, [(0, 1)])
    assert a == b and hash(a) == hash(b)
    assert len({a, b}) == 1


@given(st.integers(min_value=2, max_value=16), st.data())
@settings(max_examples=50, deadline=None)
def test_degree_sum_and_bounds(n, data):
    m = pair_count(n)
    bits = data.draw(st.integers(min_value=0, max_value=(1 << m) - 1))
    g = Graph(n, bits)
    deg = degree_sequence(g)
    assert len(deg) == n
    assert sum(deg) == 2 * g.edge_count
    assert 0 <= g.edge_count <= m


def test_degree_sequence_examples():
    assert degree_sequence(Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])) == [2, 2, 2]
    assert degree_sequence(Graph(3)) == [0, 0, 0]
    assert degree_sequence(Graph.from_edges(3, [(0, 1), (1, 2)])) == [1, 2, 1]


def test_parse_simple_file():
    batch = parse_graphs("n=3\n0 1\n1 2\n")
    assert len(batch) == 1
    assert batch[0] == Graph.from_edges(3, [(0, 1), (1, 2)])


def test_parse_multi_graph_comments_and_blanks():
    text = "# leading comment\nn=2\n0 1\n\n\nn=3  # inline\n0 2\n"
    batch = parse_graphs(text)
    assert len(batch) == 2
    assert batch[0] == Graph.from_edges(2, [(0, 1)])
    assert batch[1] == Graph.from_edges(3, [(0, 2)])


def test_roundtrip_is_normalization():
    text = "n=4\n0 1   # edge\n2 3\n0 3\n"
    batch = parse_graphs(text)
    canonical = format_graphs(batch)
    assert parse_graphs(canonical).graphs == batch.graphs
    assert format_graphs(parse_graphs(canonical)) == canonical


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("n=3\n0 0\n", "self-loop"),
        ("n=3\n0 1\n0 1\n", "duplicate"),
        ("n=3\n0 3\n", "out of range"),
        ("n=3\n1 0\n", "0 <= i < j"),
        ("n=3\n0 1 2\n", "expected"),
        ("0 1\n", "header"),
        ("n=3\nx y\n", "non-integer"),
        ("n=0\n", ">= 1"),
        ("", "no graphs"),
    ],
)
def test_parse_errors_carry_line_numbers(text, fragment):
    with pytest.raises(GraphFormatError) as err:
        parse_graphs(text)
    assert fragment in str(err.value)


def test_parse_error_line_number_attribute():
    with pytest.raises(GraphFormatError) as err:
        parse_graphs("n=3\n0 1\n0 0\n")
    assert err.value.line == 3


def test_to_dot():
    k3 = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    dot = to_dot(k3)
    assert dot.startswith("graph {")
    assert dot.count("--") == 3
    assert to_dot(k3) == dot  # deterministic

    empty = to_dot(Graph(2))
    assert empty.count(";") == 2
    assert "--" not in empty


def test_graph_batch_basics():
    g1, g2 = Graph(2), Graph.from_edges(3, [(0, 1)])
    batch = GraphBatch((g1, g2))
    assert list(batch) == [g1, g2]
    assert batch.node_counts() == (2, 3)
    assert batch[1] == g2
    assert len(batch[:1]) == 1
    with pytest.raises(ValueError):
        GraphBatch(())
    with pytest.raises(ValueError):
        batch.uniform_n()


def test_is_connected():
    assert is_connected(Graph(1))
    assert is_connected(Graph.from_edges(3, [(0, 1), (1, 2)]))
    assert not is_connected(Graph.from_edges(3, [(0, 1)]))
    assert not is_connected(Graph(2))
