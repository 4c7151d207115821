import itertools

import numpy as np
import pytest

from graphdiff.datasets import (
    DatasetSpec,
    delaunay_graph,
    gen_community_small,
    gen_dataset,
    gen_er,
    gen_planar60,
    gen_sbm,
    gen_sbm27,
)
from graphdiff.graphs import Graph, is_connected, pair_count, write_graphs
from graphdiff.seeding import derive_rng


def test_gen_er_extremes():
    rng = derive_rng(0, "er")
    assert gen_er(5, 0.0, rng) == Graph(5)
    assert gen_er(5, 1.0, rng) == Graph.complete(5)
    with pytest.raises(ValueError):
        gen_er(0, 0.5, rng)
    with pytest.raises(ValueError):
        gen_er(5, 1.5, rng)


def test_gen_er_mean_edges_binomial():
    n, p, reps = 20, 0.7, 2000
    m = pair_count(n)
    rng = derive_rng(1, "er-mean")
    total = sum(gen_er(n, p, rng).edge_count for _ in range(reps))
    expected = p * m * reps
    sigma = np.sqrt(m * reps * p * (1 - p))
    assert abs(total - expected) <= 3 * sigma


def community_block_counts(g):
    half = g.n // 2
    intra = inter = 0
    intra_pairs = 2 * pair_count(half)
    inter_pairs = half * half
    for i, j in g.edges():
        if (i < half) == (j < half):
            intra += 1
        else:
            inter += 1
    return intra, intra_pairs, inter, inter_pairs


def test_community_small_structure():
    intra = intra_pairs = inter = inter_pairs = 0
    sizes = set()
    for idx in range(2000):
        g = gen_community_small(derive_rng(2, "community", idx))
        sizes.add(g.n)
        a, ap, b, bp = community_block_counts(g)
        intra, intra_pairs = intra + a, intra_pairs + ap
        inter, inter_pairs = inter + b, inter_pairs + bp
    assert sizes == {12, 14, 16, 18, 20}
    sigma_intra = np.sqrt(intra_pairs * 0.7 * 0.3)
    assert abs(intra - 0.7 * intra_pairs) <= 3 * sigma_intra
    sigma_inter = np.sqrt(inter_pairs * 0.05 * 0.95)
    assert abs(inter - 0.05 * inter_pairs) <= 3 * sigma_inter


def test_sbm27_sizes_and_densities():
    intra = intra_pairs = 0
    for idx in range(2000):
        g, sizes = gen_sbm27(derive_rng(3, "sbm", idx), with_sizes=True)
        assert 24 <= g.n <= 27
        assert all(s in (7, 8, 9) for s in sizes)
        assert sum(sizes) == g.n
        bounds = np.cumsum((0,) + sizes)
        members = [range(bounds[k], bounds[k + 1]) for k in range(3)]
        for block in members:
            intra_pairs += pair_count(len(block))
            intra += sum(
                1 for i, j in itertools.combinations(block, 2) if g.has_edge(i, j)
            )
    sigma = np.sqrt(intra_pairs * 0.85 * 0.15)
    assert abs(intra - 0.85 * intra_pairs) <= 3 * sigma


def test_gen_sbm_validates_sizes():
    with pytest.raises(ValueError):
        gen_sbm([3, 0], 0.5, 0.1, derive_rng(4, "sbm-bad"))


def test_planar60_properties():
    for idx in range(50):
        g = gen_planar60(derive_rng(5, "planar", idx))
        assert g.n == 60
        assert g.edge_count <= 3 * 60 - 6
        assert is_connected(g)


def brute_force_delaunay_edges(points):
    """Empty-circumcircle test over all triples (general-position oracle)."""
    n = len(points)
    edges = set()
    for i, j, k in itertools.combinations(range(n), 3):
        a, b, c = points[i], points[j], points[k]
        # circumcircle via the standard in-circle determinant
        rows = []
        for p in (a, b, c):
            rows.append([p[0], p[1], p[0] ** 2 + p[1] ** 2, 1.0])
        empty = True
        for q_idx in range(n):
            if q_idx in (i, j, k):
                continue
            q = points[q_idx]
            mat = np.array(rows + [[q[0], q[1], q[0] ** 2 + q[1] ** 2, 1.0]])
            det = np.linalg.det(mat)
            orient = np.linalg.det(
                np.array([[b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]])
            )
            if det * orient > 0:  # q strictly inside the circumcircle
                empty = False
                break
        if empty:
            edges.update({(min(i, j), max(i, j)), (min(i, k), max(i, k)), (min(j, k), max(j, k))})
    return edges


@pytest.mark.parametrize("n", [5, 7, 10])
def test_delaunay_matches_brute_force_and_euler_count(n):
    from scipy.spatial import ConvexHull

    for trial in range(4):
        rng = derive_rng(6, f"delaunay-{n}", trial)
        points = rng.random((n, 2))
        g = delaunay_graph(points)
        assert set(g.edges()) == brute_force_delaunay_edges(points)
        hull = ConvexHull(points)
        assert g.edge_count == 3 * n - 3 - len(hull.vertices)


def test_gen_dataset_deterministic_and_counts():
    spec = DatasetSpec(kind="sbm-27", count=5, seed=7)
    a = gen_dataset(spec)
    b = gen_dataset(spec)
    assert a.graphs == b.graphs
    assert len(a) == 5
    assert all(24 <= n <= 27 for n in a.node_counts())


def test_gen_dataset_default_counts():
    assert DatasetSpec(kind="community-small", seed=0).resolved_count() == 100
    assert DatasetSpec(kind="sbm-27", seed=0).resolved_count() == 200
    assert DatasetSpec(kind="planar-60", seed=0).resolved_count() == 200


def test_gen_dataset_file_kind(tmp_path):
    path = tmp_path / "graphs.gl"
    batch_in = gen_dataset(DatasetSpec(kind="er", count=3, seed=1, nodes=6, edge_prob=0.5))
    write_graphs(batch_in, path)
    batch_out = gen_dataset(DatasetSpec(kind="file", path=path))
    assert batch_out.graphs == batch_in.graphs


def test_dataset_spec_validation():
    with pytest.raises(ValueError):
        DatasetSpec(kind="er", count=3, seed=0)  # missing nodes/edge_prob
    with pytest.raises(ValueError):
        DatasetSpec(kind="hypercube", count=3, seed=0)
    with pytest.raises(ValueError):
        DatasetSpec(kind="file")
    with pytest.raises(ValueError):
        DatasetSpec(kind="sbm-27", count=0, seed=0)
