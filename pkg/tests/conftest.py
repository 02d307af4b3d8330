"""Shared test helpers: independent slow-but-simple oracles and graph makers.

The oracles here deliberately avoid all production solver code: projected
gradient on the dual box QP, and plain double loops for the metrics.
"""

import numpy as np

from pgfl.graph import Graph, build_graph


def pgd_dual_oracle(n, edges, y, lam, iters=100000):
    """Projected gradient on the dual box QP; returns the primal vector.

    min_u (1/2)||D^T u||^2 - u^T D y  s.t. ||u||_inf <= lam/2, step 1/L with
    L = 2 * max degree, then beta = y - D^T u.
    """
    edges = np.asarray(edges)
    if len(edges) == 0 or lam == 0:
        return np.asarray(y, dtype=float).copy()
    ei, ej = edges[:, 0], edges[:, 1]
    r = lam / 2.0
    deg = np.bincount(np.concatenate([ei, ej]), minlength=n)
    L = 2.0 * max(int(deg.max()), 1)
    dy = y[ei] - y[ej]
    u = np.zeros(len(ei))
    for _ in range(iters):
        dtu = np.zeros(n)
        np.add.at(dtu, ei, u)
        np.subtract.at(dtu, ej, u)
        grad = (dtu[ei] - dtu[ej]) - dy
        u = np.clip(u - grad / L, -r, r)
    dtu = np.zeros(n)
    np.add.at(dtu, ei, u)
    np.subtract.at(dtu, ej, u)
    return y - dtu


def prox_objective_direct(edges, y, b, lam):
    """||y - b||^2 + lam ||D b||_1 computed straight from the arrays."""
    edges = np.asarray(edges)
    if len(edges) == 0:
        return float(np.sum((y - b) ** 2))
    d = b[edges[:, 0]] - b[edges[:, 1]]
    return float(np.sum((y - b) ** 2) + lam * np.sum(np.abs(d)))


def explicit_power_edges(n, edges):
    """Cartesian-square edge set over row-major dyad indices, deduplicated."""
    out = set()
    for i, j in edges:
        i, j = int(i), int(j)
        for k in range(n):
            out.add(tuple(sorted((k * n + i, k * n + j))))
            out.add(tuple(sorted((i * n + k, j * n + k))))
    return np.array(sorted(out), dtype=np.int64)


def random_connected_graph(rng, n) -> Graph:
    """Random spanning tree plus a few extra edges."""
    perm = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        a = int(perm[k])
        b = int(perm[rng.integers(0, k)])
        edges.add((min(a, b), max(a, b)))
    for _ in range(int(rng.integers(0, max(1, 2 * n)))):
        a, b = (int(v) for v in rng.integers(0, n, 2))
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return build_graph(n, sorted(edges))
