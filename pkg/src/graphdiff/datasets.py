"""Synthetic graph dataset generators and an edge-list file loader.

Generators cover Erdős–Rényi graphs, the two-community "community-small"
family, a three-community stochastic block model totaling 24-27 nodes, and
60-node planar graphs from Delaunay triangulations of uniform points. Ego
data is supported through pre-extracted edge-list files only.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .graphs import Graph, GraphBatch, is_connected, pair_indices, read_graphs
from .seeding import derive_rng

__all__ = [
    "DatasetSpec",
    "gen_er",
    "gen_community_small",
    "gen_sbm",
    "gen_sbm27",
    "gen_planar60",
    "delaunay_graph",
    "gen_dataset",
]

COMMUNITY_SMALL_SIZES = (12, 14, 16, 18, 20)
COMMUNITY_SMALL_P_INTRA = 0.7
COMMUNITY_SMALL_P_INTER = 0.05
SBM27_COMMUNITY_CHOICES = (7, 8, 9)
SBM27_TOTAL_RANGE = (24, 27)
SBM27_P_INTRA = 0.85
SBM27_P_INTER = 0.046875
PLANAR_NODES = 60

DEFAULT_COUNTS = {"community-small": 100, "sbm-27": 200, "planar-60": 200}


def gen_er(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Erdős–Rényi G(n, p): each pair present independently with probability p."""
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    if not 0 <= p <= 1:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    return Graph.from_edge_array(n, rng.random(n * (n - 1) // 2) < p)


def _blockwise(n: int, membership: np.ndarray, p_intra: float, p_inter: float,
               rng: np.random.Generator) -> Graph:
    pairs = pair_indices(n)
    same = membership[pairs[:, 0]] == membership[pairs[:, 1]]
    p = np.where(same, p_intra, p_inter)
    return Graph.from_edge_array(n, rng.random(len(pairs)) < p)


def gen_community_small(rng: np.random.Generator) -> Graph:
    """Two equal ER(p=0.7) communities with sparse (p=0.05) links between them.

    The total node count is drawn uniformly from the even values 12..20.
    """
    n = int(rng.choice(COMMUNITY_SMALL_SIZES))
    membership = np.repeat([0, 1], n // 2)
    return _blockwise(n, membership, COMMUNITY_SMALL_P_INTRA, COMMUNITY_SMALL_P_INTER, rng)


def gen_sbm(sizes, p_intra: float, p_inter: float, rng: np.random.Generator) -> Graph:
    """Stochastic block model with consecutive communities of the given sizes."""
    sizes = [int(s) for s in sizes]
    if any(s < 1 for s in sizes):
        raise ValueError("community sizes must be >= 1")
    membership = np.repeat(np.arange(len(sizes)), sizes)
    return _blockwise(int(np.sum(sizes)), membership, p_intra, p_inter, rng)


def gen_sbm27(rng: np.random.Generator, with_sizes: bool = False):
    """Three-community SBM, p_intra=0.85 / p_inter=0.046875.

    Community sizes are drawn independently and uniformly from {7, 8, 9},
    rejection-sampled until the total lands in 24..27.
    """
    lo, hi = SBM27_TOTAL_RANGE
    while True:
        sizes = rng.choice(SBM27_COMMUNITY_CHOICES, size=3)
        if lo <= sizes.sum() <= hi:
            break
    g = gen_sbm(sizes, SBM27_P_INTRA, SBM27_P_INTER, rng)
    if with_sizes:
        return g, tuple(int(s) for s in sizes)
    return g


def delaunay_graph(points: np.ndarray) -> Graph:
    """Graph of a Delaunay triangulation's edges (triangulation by Qhull)."""
    points = np.asarray(points, dtype=np.float64)
    tri = Delaunay(points)
    if len(tri.coplanar):
        raise QhullError("degenerate input: not all points were triangulated")
    edges = set()
    for a, b, c in tri.simplices:
        edges.add((min(a, b), max(a, b)))
        edges.add((min(a, c), max(a, c)))
        edges.add((min(b, c), max(b, c)))
    return Graph.from_edges(len(points), edges)


def gen_planar60(rng: np.random.Generator) -> Graph:
    """Delaunay triangulation of 60 uniform points on the unit square.

    Degenerate point sets that Qhull rejects (or that drop a point) are
    regenerated from the same stream.
    """
    while True:
        points = rng.random((PLANAR_NODES, 2))
        try:
            g = delaunay_graph(points)
        except QhullError:
            continue
        if is_connected(g):
            return g


@dataclass(frozen=True)
class DatasetSpec:
    """What to generate: a named family, how many graphs, and the seed.

    ``kind`` is one of er | community-small | sbm-27 | planar-60 | file.
    ER needs ``nodes`` and ``edge_prob``; ``file`` reads ``path`` and ignores
    count/seed.
    """

    kind: str
    count: int | None = None
    seed: int = 0
    nodes: int | None = None
    edge_prob: float | None = None
    path: str | Path | None = None

    def __post_init__(self):
        if self.kind == "file":
            if self.path is None:
                raise ValueError("kind='file' requires a path")
            return
        if self.kind not in _GENERATORS:
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.kind == "er" and (self.nodes is None or self.edge_prob is None):
            raise ValueError("kind='er' requires nodes and edge_prob")
        count = self.count if self.count is not None else DEFAULT_COUNTS.get(self.kind)
        if count is None or count < 1:
            raise ValueError(f"dataset count must be >= 1, got {self.count}")

    def resolved_count(self) -> int:
        if self.count is not None:
            return self.count
        return DEFAULT_COUNTS[self.kind]


_GENERATORS = {
    "er": lambda spec, rng: gen_er(spec.nodes, spec.edge_prob, rng),
    "community-small": lambda spec, rng: gen_community_small(rng),
    "sbm-27": lambda spec, rng: gen_sbm27(rng),
    "planar-60": lambda spec, rng: gen_planar60(rng),
}


def gen_dataset(spec: DatasetSpec) -> GraphBatch:
    """Materialize a dataset; each graph uses its own (seed, index) stream."""
    if spec.kind == "file":
        return read_graphs(spec.path)
    gen = _GENERATORS[spec.kind]
    role = f"dataset:{spec.kind}"
    graphs = tuple(
        gen(spec, derive_rng(spec.seed, role, index))
        for index in range(spec.resolved_count())
    )
    return GraphBatch(graphs)
