"""Sparse undirected graphs, the edge incidence operator, and streamed
enumeration of Cartesian-square (C2-power) edges.

Edges are stored once as ordered pairs (i, j) with i < j.  The incidence
operator uses the fixed orientation (Db)_e = b_i - b_j for a stored edge
e = (i, j); only absolute differences matter downstream, so any fixed
convention is valid, and fixing one keeps dual vectors reproducible.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import FileFormatError, InputError


class Graph:
    """Immutable simple undirected graph over vertices 0..n-1.

    Attributes:
        n: vertex count.
        edges: (m, 2) int array, each row (i, j) with i < j, deduplicated.
        adjacency: per-vertex sorted neighbor lists.
        component_label: per-vertex component id, 0..q-1.
        q: number of connected components.
    """

    def __init__(self, n: int, edges: np.ndarray):
        self.n = int(n)
        self.edges = edges
        self.m = edges.shape[0]
        self.adjacency = [[] for _ in range(self.n)]
        for i, j in edges:
            self.adjacency[i].append(int(j))
            self.adjacency[j].append(int(i))
        for nbrs in self.adjacency:
            nbrs.sort()
        self.component_label, self.q = _component_labels(self.n, edges)

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m}, q={self.q})"


def _component_labels(n: int, edges: np.ndarray) -> Tuple[np.ndarray, int]:
    if edges.shape[0] == 0:
        return np.arange(n, dtype=np.int64), n
    adj = coo_matrix(
        (np.ones(edges.shape[0]), (edges[:, 0], edges[:, 1])), shape=(n, n)
    )
    q, raw = connected_components(adj, directed=False)
    # relabel so ids appear in order of first vertex occurrence
    order = np.full(q, -1, dtype=np.int64)
    nxt = 0
    labels = np.empty(n, dtype=np.int64)
    for v in range(n):
        r = raw[v]
        if order[r] < 0:
            order[r] = nxt
            nxt += 1
        labels[v] = order[r]
    return labels, q


def build_graph(n: int, raw_edges: Iterable[Sequence[int]]) -> Graph:
    """Construct a Graph, dropping self-loops and collapsing duplicates.

    Both orientations of an edge collapse to the single stored pair (i, j)
    with i < j.  Raises InputError for endpoints outside [0, n).
    """
    if n < 1:
        raise InputError(f"vertex count must be >= 1, got {n}")
    arr = np.asarray(list(raw_edges), dtype=np.int64)
    if arr.size == 0:
        return Graph(n, np.empty((0, 2), dtype=np.int64))
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError("edges must be pairs")
    if arr.min() < 0 or arr.max() >= n:
        bad = arr[(arr.min(axis=1) < 0) | (arr.max(axis=1) >= n)][0]
        raise InputError(f"edge endpoint out of range [0, {n}): {tuple(bad)}")
    lo = arr.min(axis=1)
    hi = arr.max(axis=1)
    keep = lo != hi  # drop self-loops
    pairs = np.unique(np.stack([lo[keep], hi[keep]], axis=1), axis=0)
    if pairs.size == 0:
        pairs = np.empty((0, 2), dtype=np.int64)
    return Graph(n, pairs)


class IncidenceOperator:
    """Edge-incidence operator of a Graph: (Db)_e = b_i - b_j for e=(i,j), i<j."""

    def __init__(self, graph: Graph):
        self.graph = graph
        self.ei = graph.edges[:, 0]
        self.ej = graph.edges[:, 1]

    @property
    def shape(self):
        return (self.graph.m, self.graph.n)

    def apply(self, beta: np.ndarray) -> np.ndarray:
        """Forward map: length-n vertex vector to length-m edge differences."""
        beta = np.asarray(beta, dtype=float)
        if beta.shape[0] != self.graph.n:
            raise InputError(
                f"expected length-{self.graph.n} vector, got {beta.shape[0]}"
            )
        return beta[self.ei] - beta[self.ej]

    def apply_transpose(self, u: np.ndarray) -> np.ndarray:
        """Adjoint map: length-m edge vector to length-n vertex vector."""
        u = np.asarray(u, dtype=float)
        if u.shape[0] != self.graph.m:
            raise InputError(
                f"expected length-{self.graph.m} vector, got {u.shape[0]}"
            )
        out = np.zeros(self.graph.n, dtype=float)
        np.add.at(out, self.ei, u)
        np.subtract.at(out, self.ej, u)
        return out

    def dense(self) -> np.ndarray:
        """Dense m x n matrix form; intended for small graphs and tests."""
        D = np.zeros(self.shape)
        D[np.arange(self.graph.m), self.ei] = 1.0
        D[np.arange(self.graph.m), self.ej] = -1.0
        return D


def incidence_apply(op: IncidenceOperator, beta: np.ndarray) -> np.ndarray:
    return op.apply(beta)


def incidence_apply_transpose(op: IncidenceOperator, u: np.ndarray) -> np.ndarray:
    return op.apply_transpose(u)


DyadEdge = Tuple[Tuple[int, int], Tuple[int, int]]


def power_edges(g: Graph) -> Iterator[DyadEdge]:
    """Stream the Cartesian-square edge set of g, one undirected edge at a time.

    Dyads (i0, j0) and (i1, j1) are adjacent iff they agree in one coordinate
    and the other coordinate moves along an edge of g.  Yields exactly
    2 * n * m edges; never materializes the n^2-node adjacency.
    """
    for i, j in g.edges:
        i = int(i)
        j = int(j)
        for k in range(g.n):
            yield ((k, i), (k, j))  # second coordinate moves along (i, j)
            yield ((i, k), (j, k))  # first coordinate moves along (i, j)


def power_edge_blocks(g: Graph, flat: bool = True):
    """Vectorized companion to power_edges: per predictor edge, yield the
    2n incident power edges as flat (row-major) dyad index arrays.

    Used by dyad segmentation so the union-find can consume numpy batches.
    """
    n = g.n
    ks = np.arange(n, dtype=np.int64)
    for i, j in g.edges:
        a = np.concatenate([ks * n + i, i * n + ks])
        b = np.concatenate([ks * n + j, j * n + ks])
        yield a, b


def dyad_index(i: int, j: int, n: int) -> int:
    """Row-major linearization of the dyad (i, j)."""
    return i * n + j


# ---------------------------------------------------------------------------
# standard graph constructors


def chain_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(n: int) -> Graph:
    return build_graph(n, [(0, i) for i in range(1, n)])


def cycle_graph(n: int) -> Graph:
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


# ---------------------------------------------------------------------------
# graph file I/O: first line "n m", then m lines "i j" (0-based)


def read_graph_file(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FileFormatError(f"{path}: empty graph file")
    head = lines[0].split()
    if len(head) != 2:
        raise FileFormatError(f"{path}:1: expected header 'n m', got {lines[0]!r}")
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise FileFormatError(
            f"{path}:1: header fields must be integers, got {lines[0]!r}"
        ) from None
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FileFormatError(f"{path}:{lineno}: expected 'i j', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise FileFormatError(
                f"{path}:{lineno}: endpoints must be integers, got {line!r}"
            ) from None
        edges.append((i, j))
    if len(edges) != m:
        raise FileFormatError(
            f"{path}: header declares {m} edges but file contains {len(edges)}"
        )
    try:
        return build_graph(n, edges)
    except InputError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def write_graph_file(path, g: Graph) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{g.n} {g.m}\n")
        for i, j in g.edges:
            fh.write(f"{i} {j}\n")
