"""Bit-packed simple undirected graphs, batching, and edge-list serialization.

A graph on ``n`` nodes stores its edges as one Python integer whose bit ``k``
corresponds to the ``k``-th unordered pair ``{i, j}`` (``i < j``) in row-major
upper-triangular order. Self-loops and parallel edges are unrepresentable, and
symmetry is implicit.
"""

from __future__ import annotations

import operator
import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

__all__ = [
    "Graph",
    "GraphBatch",
    "GraphFormatError",
    "degree_sequence",
    "edge_index",
    "edge_pair",
    "pair_count",
    "pair_indices",
    "parse_graphs",
    "format_graphs",
    "read_graphs",
    "write_graphs",
    "to_dot",
    "is_connected",
]


class GraphFormatError(ValueError):
    """Raised for malformed edge-list input; carries a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def pair_count(n: int) -> int:
    """Number of unordered node pairs of an n-node graph."""
    return n * (n - 1) // 2


def edge_index(i: int, j: int, n: int) -> int:
    """Map a pair (i, j) with 0 <= i < j < n to its upper-triangular index.

    Pairs are ordered row-major: (0,1), (0,2), ..., (0,n-1), (1,2), ...
    """
    i, j, n = operator.index(i), operator.index(j), operator.index(n)
    if not 0 <= i < j < n:
        raise IndexError(f"invalid pair ({i}, {j}) for n={n}")
    return i * n - i * (i + 3) // 2 + j - 1


def edge_pair(k: int, n: int) -> tuple[int, int]:
    """Inverse of :func:`edge_index`: recover (i, j) from a pair index."""
    if not 0 <= k < pair_count(n):
        raise IndexError(f"pair index {k} out of range for n={n}")
    i = 0
    row = n - 1  # pairs in row i
    while k >= row:
        k -= row
        i += 1
        row -= 1
    return i, i + 1 + k


@lru_cache(maxsize=32)
def pair_indices(n: int) -> np.ndarray:
    """(m, 2) array of all pairs (i, j), i < j, in edge_index order. Read-only."""
    iu, ju = np.triu_indices(n, k=1)
    out = np.stack([iu, ju], axis=1)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph with bit-set edge storage."""

    n: int
    bits: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count must be >= 1, got {self.n}")
        if self.bits < 0 or self.bits >> pair_count(self.n):
            raise ValueError("edge bits out of range for node count")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> Graph:
        bits = 0
        for i, j in edges:
            if i > j:
                i, j = j, i
            bits |= 1 << edge_index(i, j, n)
        return cls(n, bits)

    @classmethod
    def from_edge_array(cls, n: int, arr: np.ndarray) -> Graph:
        """Build from a boolean/0-1 vector over pairs in edge_index order."""
        arr = np.asarray(arr)
        if arr.shape != (pair_count(n),):
            raise ValueError(f"expected {pair_count(n)} pair flags, got shape {arr.shape}")
        packed = np.packbits(arr != 0, bitorder="little")
        return cls(n, int.from_bytes(packed.tobytes(), "little"))

    @classmethod
    def from_adjacency(cls, a: np.ndarray) -> Graph:
        a = np.asarray(a)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("adjacency matrix must be square")
        iu, ju = np.triu_indices(n, k=1)
        return cls.from_edge_array(n, a[iu, ju] != 0)

    @classmethod
    def complete(cls, n: int) -> Graph:
        return cls(n, (1 << pair_count(n)) - 1)

    @property
    def edge_count(self) -> int:
        return self.bits.bit_count()

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        if i > j:
            i, j = j, i
        return bool(self.bits >> edge_index(i, j, self.n) & 1)

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield edges as (i, j), i < j, in edge_index order."""
        bits = self.bits
        k = 0
        while bits:
            if bits & 1:
                yield edge_pair(k, self.n)
            bits >>= 1
            k += 1

    def edge_array(self) -> np.ndarray:
        """Boolean vector over all pairs in edge_index order."""
        m = pair_count(self.n)
        raw = self.bits.to_bytes((m + 7) // 8 or 1, "little")
        flat = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        return flat[:m].astype(bool)

    def adjacency(self, dtype=np.float64) -> np.ndarray:
        """Dense symmetric n x n adjacency matrix with zero diagonal."""
        a = np.zeros((self.n, self.n), dtype=dtype)
        if self.bits:
            pairs = pair_indices(self.n)[self.edge_array()]
            a[pairs[:, 0], pairs[:, 1]] = 1
            a[pairs[:, 1], pairs[:, 0]] = 1
        return a


def degree_sequence(g: Graph) -> list[int]:
    """Per-node degrees; sums to twice the edge count."""
    deg = [0] * g.n
    for i, j in g.edges():
        deg[i] += 1
        deg[j] += 1
    return deg


def is_connected(g: Graph) -> bool:
    """True when every node is reachable from node 0."""
    if g.n == 1:
        return True
    adj: list[list[int]] = [[] for _ in range(g.n)]
    for i, j in g.edges():
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == g.n


@dataclass(frozen=True)
class GraphBatch:
    """Ordered, immutable collection of graphs (node counts may differ)."""

    graphs: tuple[Graph, ...]

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if not self.graphs:
            raise ValueError("a graph batch must contain at least one graph")

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self) -> Iterator[Graph]:
        return iter(self.graphs)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return GraphBatch(self.graphs[idx])
        return self.graphs[idx]

    def node_counts(self) -> tuple[int, ...]:
        return tuple(g.n for g in self.graphs)

    def uniform_n(self) -> int:
        """The shared node count; raises when graphs disagree."""
        counts = set(self.node_counts())
        if len(counts) != 1:
            raise ValueError(f"batch mixes node counts: {sorted(counts)}")
        return counts.pop()


_HEADER_RE = re.compile(r"n\s*=\s*(\d+)")


def parse_graphs(text: str) -> GraphBatch:
    """Parse an edge-list document (see module docs for the format).

    Each graph starts with a line ``n=<int>``, followed by one ``<i> <j>``
    line per edge with ``0 <= i < j < n``. ``#`` starts a comment; a blank
    line ends the current graph.
    """
    graphs: list[Graph] = []
    n: int | None = None
    bits = 0

    def finish():
        nonlocal n, bits
        if n is not None:
            graphs.append(Graph(n, bits))
            n, bits = None, 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            finish()
            continue
        m = _HEADER_RE.fullmatch(line)
        if m:
            if n is not None:
                raise GraphFormatError(
                    "new graph header without a separating blank line", lineno
                )
            n = int(m.group(1))
            if n < 1:
                raise GraphFormatError(f"node count must be >= 1, got {n}", lineno)
            continue
        if n is None:
            raise GraphFormatError(f"expected 'n=<int>' header, got {line!r}", lineno)
        fields = line.split()
        if len(fields) != 2:
            raise GraphFormatError(f"expected '<i> <j>', got {line!r}", lineno)
        try:
            i, j = int(fields[0]), int(fields[1])
        except ValueError:
            raise GraphFormatError(f"non-integer node index in {line!r}", lineno) from None
        if i == j:
            raise GraphFormatError(f"self-loop {i} {j}", lineno)
        if not 0 <= i < j:
            raise GraphFormatError(f"edge {i} {j} violates 0 <= i < j", lineno)
        if j >= n:
            raise GraphFormatError(f"node index {j} out of range for n={n}", lineno)
        k = edge_index(i, j, n)
        if bits >> k & 1:
            raise GraphFormatError(f"duplicate edge {i} {j}", lineno)
        bits |= 1 << k
    finish()

    if not graphs:
        raise GraphFormatError("no graphs found")
    return GraphBatch(tuple(graphs))


def format_graphs(batch: GraphBatch | Graph) -> str:
    """Canonical edge-list text: sorted edges, one blank line between graphs."""
    if isinstance(batch, Graph):
        batch = GraphBatch((batch,))
    blocks = []
    for g in batch:
        lines = [f"n={g.n}"]
        lines.extend(f"{i} {j}" for i, j in g.edges())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def read_graphs(path: str | Path) -> GraphBatch:
    return parse_graphs(Path(path).read_text())


def write_graphs(batch: GraphBatch | Graph, path: str | Path) -> None:
    Path(path).write_text(format_graphs(batch))


def to_dot(g: Graph, name: str = "") -> str:
    """Deterministic DOT rendering: node declarations then sorted edges."""
    head = f"graph {name} {{" if name else "graph {"
    lines = [head]
    lines.extend(f"  {v};" for v in range(g.n))
    lines.extend(f"  {i} -- {j};" for i, j in g.edges())
    lines.append("}")
    return "\n".join(lines) + "\n"
