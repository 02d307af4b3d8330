"""Vertex distance estimation from an adjacency matrix and the KNN graph.

Two squared metrics between columns A_i, A_j of the response matrix:

    d1^2(i,j)   = sum_{k != i,j} |(A_i - A_j)^T A_k| / (n (n-2))
    dinf^2(i,j) = max_{k != i,j} |(A_i - A_j)^T A_k| / n

Both reduce to differences of rows of the Gram matrix A^T A, which is what
the implementation computes.  Distances are kept squared; only the ordering
matters for nearest-neighbor selection.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .graph import Graph, build_graph


class DistanceMatrix:
    """Symmetric n x n matrix of squared vertex distances, zero diagonal."""

    def __init__(self, entries: np.ndarray):
        self.entries = entries
        self.n = entries.shape[0]

    def to_csv(self, path) -> None:
        np.savetxt(path, self.entries, delimiter=",")


def _check_square(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"adjacency must be square, got shape {A.shape}")
    if A.shape[0] < 3:
        raise InputError("need n >= 3 vertices (the sum over k != i,j degenerates)")
    return A


def d1_matrix(A: np.ndarray) -> DistanceMatrix:
    """Averaged-correlation squared metric between columns of A."""
    A = _check_square(A)
    n = A.shape[0]
    G = A.T @ A
    out = np.empty((n, n))
    for i in range(n):
        # sum over all k of |G[i,k] - G[j,k]|, then drop the k = i, j terms
        diff = np.abs(G[i][None, :] - G)  # (n, n): row j, column k
        k_i = diff[:, i]
        k_j = diff[np.arange(n), np.arange(n)]
        out[i] = (diff.sum(axis=1) - k_i - k_j) / (n * (n - 2))
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 0.0)
    return DistanceMatrix(out)


def dinf_matrix(A: np.ndarray) -> DistanceMatrix:
    """Max-correlation squared metric (used by the neighborhood smoother)."""
    A = _check_square(A)
    n = A.shape[0]
    G = A.T @ A
    out = np.empty((n, n))
    for i in range(n):
        diff = np.abs(G[i][None, :] - G)  # (n, n): row j, column k
        diff[:, i] = -np.inf  # exclude k = i
        diff[np.arange(n), np.arange(n)] = -np.inf  # exclude k = j
        out[i] = diff.max(axis=1) / n
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 0.0)
    return DistanceMatrix(out)


def knn_graph(D: DistanceMatrix, K: int) -> Graph:
    """Union-symmetrized K-nearest-neighbor graph of a distance matrix.

    (i, j) is an edge iff i is among the K nearest of j or vice versa, so
    every vertex ends with degree >= K.  Ties in distance are broken by
    smaller vertex index for determinism.
    """
    n = D.n
    if not 1 <= K <= n - 1:
        raise InputError(f"K must be in [1, {n - 1}], got {K}")
    ent = D.entries
    edges = []
    idx = np.arange(n)
    for i in range(n):
        order = np.lexsort((idx, ent[i]))
        order = order[order != i][:K]
        for j in order:
            edges.append((min(i, int(j)), max(i, int(j))))
    return build_graph(n, edges)
