"""Graphon models, network sampling, the KNN pipeline, and baseline estimators.

The built-in graphon suite (names used by the CLI and benchmark configs):

    rank1     f(u,v) = u*v — monotone degrees, rank one
    sbm2      2-block model, within 0.6 / between 0.2
    wave      smooth oscillation with local structure, values in [0.1, 0.9]
    blocks4   4-block piecewise-constant with non-monotone block degrees
    checker6  6-block checkerboard

These are stand-in models for benchmarking; values are always in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from .admm import clamp_unit, pgfl
from .errors import InputError
from .graph import chain_graph
from .metrics import d1_matrix, dinf_matrix, knn_graph
from .segmentation import DyadPartition, segment_dyads


class GraphonModel:
    """A measurable f: [0,1]^2 -> [0,1], analytic or gridded.

    Analytic models wrap a vectorized callable; gridded models hold an
    r x r lookup table evaluated bilinearly.
    """

    def __init__(self, name: str, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]):
        self.name = name
        self._fn = fn

    def evaluate(self, u, v) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        out = np.clip(self._fn(u, v), 0.0, 1.0)
        return out

    @classmethod
    def constant(cls, c: float) -> "GraphonModel":
        return cls(f"constant{c}", lambda u, v: np.full(np.broadcast(u, v).shape, float(c)))

    @classmethod
    def from_blocks(cls, name: str, block_probs: np.ndarray) -> "GraphonModel":
        """Piecewise-constant model on an equal-width block grid."""
        B = np.asarray(block_probs, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise InputError("block probability table must be square")
        if B.min() < 0 or B.max() > 1:
            raise InputError("block probabilities must lie in [0, 1]")
        r = B.shape[0]

        def fn(u, v):
            bu = np.minimum((np.asarray(u) * r).astype(int), r - 1)
            bv = np.minimum((np.asarray(v) * r).astype(int), r - 1)
            return B[bu, bv]

        return cls(name, fn)

    @classmethod
    def from_grid(cls, name: str, table: np.ndarray) -> "GraphonModel":
        """Bilinear interpolation of an r x r sampled table."""
        T = np.asarray(table, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] < 2:
            raise InputError("grid table must be square with r >= 2")
        if T.min() < 0 or T.max() > 1:
            raise InputError("grid values must lie in [0, 1]")
        r = T.shape[0]

        def fn(u, v):
            x = np.clip(np.asarray(u, dtype=float), 0, 1) * (r - 1)
            y = np.clip(np.asarray(v, dtype=float), 0, 1) * (r - 1)
            x0 = np.minimum(x.astype(int), r - 2)
            y0 = np.minimum(y.astype(int), r - 2)
            fx = x - x0
            fy = y - y0
            return (
                T[x0, y0] * (1 - fx) * (1 - fy)
                + T[x0 + 1, y0] * fx * (1 - fy)
                + T[x0, y0 + 1] * (1 - fx) * fy
                + T[x0 + 1, y0 + 1] * fx * fy
            )

        return cls(name, fn)


def _wave(u, v):
    return 0.5 + 0.4 * np.sin(5 * np.pi * (u + v - 1)) / (1.0 + 4.0 * (u - v) ** 2)


_BLOCKS4 = np.array(
    [
        [0.70, 0.20, 0.40, 0.10],
        [0.20, 0.50, 0.10, 0.60],
        [0.40, 0.10, 0.60, 0.30],
        [0.10, 0.60, 0.30, 0.40],
    ]
)


def _checker6() -> np.ndarray:
    B = np.empty((6, 6))
    for a in range(6):
        for b in range(6):
            B[a, b] = 0.6 if (a + b) % 2 == 0 else 0.15
    return B


def builtin_graphons() -> Dict[str, GraphonModel]:
    return {
        "rank1": GraphonModel("rank1", lambda u, v: u * v),
        "sbm2": GraphonModel.from_blocks(
            "sbm2", np.array([[0.6, 0.2], [0.2, 0.6]])
        ),
        "wave": GraphonModel("wave", _wave),
        "blocks4": GraphonModel.from_blocks("blocks4", _BLOCKS4),
        "checker6": GraphonModel.from_blocks("checker6", _checker6()),
    }


def get_graphon(name: str) -> GraphonModel:
    models = builtin_graphons()
    if name not in models:
        raise InputError(
            f"unknown graphon {name!r}; available: {', '.join(sorted(models))}"
        )
    return models[name]


@dataclass
class NetworkSample:
    A: np.ndarray   # binary adjacency, symmetric, zero diagonal
    xi: np.ndarray  # latent uniforms
    P0: np.ndarray  # conditional probabilities f(xi_i, xi_j)
    seed: int


def sample_network(model: GraphonModel, n: int, seed: int) -> NetworkSample:
    """Draw latent uniforms, then an independent Bernoulli upper triangle."""
    if n < 3:
        raise InputError(f"need n >= 3, got {n}")
    rng = np.random.default_rng(seed)
    xi = rng.uniform(size=n)
    P0 = model.evaluate(xi[:, None], xi[None, :])
    upper = rng.random((n, n)) < P0
    A = np.triu(upper, k=1).astype(float)
    A = A + A.T
    return NetworkSample(A=A, xi=xi, P0=P0, seed=seed)


def mse(P_hat: np.ndarray, P0: np.ndarray) -> float:
    """(1/n^2) ||P_hat - P0||_F^2 over all entries, diagonal included."""
    P_hat = np.asarray(P_hat, dtype=float)
    P0 = np.asarray(P0, dtype=float)
    if P_hat.shape != P0.shape:
        raise InputError(f"shape mismatch: {P_hat.shape} vs {P0.shape}")
    return float(np.mean((P_hat - P0) ** 2))


def grand_mean_estimate(A: np.ndarray) -> np.ndarray:
    """The trivial baseline: every entry is mean(A)."""
    A = np.asarray(A, dtype=float)
    return np.full_like(A, A.mean())


def knn_pgfl_estimate(A: np.ndarray, K: int = 2, lam: float = 0.5,
                      eta: float = 1.0, stop_ratio: float = 0.01,
                      max_iter: int = 200, eps: Optional[float] = None,
                      threads: int = 1, segment: bool = True):
    """Full pipeline: learned metric -> KNN graph -> power-graph fused lasso
    -> [0,1] clamp -> dyad segmentation.

    Returns (P_hat, partition, diagnostics);  partition is None when
    segment=False.
    """
    A = np.asarray(A, dtype=float)
    D = d1_matrix(A)
    g = knn_graph(D, K)
    result = pgfl(A, g, lam, eta=eta, stop_ratio=stop_ratio,
                  max_iter=max_iter, estimate_mode="average", clamp=True,
                  threads=threads)
    partition: Optional[DyadPartition] = None
    if segment:
        partition = segment_dyads(result.P_hat, g, eps=eps)
    diagnostics = {
        "q_components": g.q,
        "knn_edges": g.m,
        "iterations": result.iterations,
        "converged": result.converged,
        "residuals": result.residuals,
        "objective": result.objective,
        "num_segments": partition.num_segments if partition is not None else None,
    }
    return result.P_hat, partition, diagnostics


def ns_estimate(A: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    """Neighborhood smoothing baseline.

    For each vertex i the neighborhood is the set of j != i whose max-metric
    distance falls below the h-quantile of row i; the estimate averages the
    adjacency rows of those neighbors, then symmetrizes.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if h is None:
        h = min(1.0, np.sqrt(n * np.log(n)) / n)
    D = dinf_matrix(A).entries
    P = np.empty_like(A)
    idx = np.arange(n)
    for i in range(n):
        row = D[i, idx != i]
        thresh = np.quantile(row, h)
        nbrs = idx[(D[i] <= thresh) & (idx != i)]
        P[i] = A[nbrs].mean(axis=0)
    return 0.5 * (P + P.T)


def usvt_estimate(A: np.ndarray, c: float = 2.02) -> np.ndarray:
    """Singular value thresholding baseline: keep sigma > c*sqrt(n), clamp."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > c * np.sqrt(n)
    P = (U[:, keep] * s[keep]) @ Vt[keep]
    return clamp_unit(P)


def sas_lite_estimate(A: np.ndarray, lam: float = 0.5, h: int = 10,
                      eta: float = 1.0, stop_ratio: float = 0.01,
                      max_iter: int = 200, threads: int = 1) -> np.ndarray:
    """Sorting-and-smoothing baseline: order vertices by degree (tie-break by
    index), average the sorted adjacency over h-by-h bins (skipping the
    structural zero diagonal), then denoise the bin grid with a chain fused
    lasso and un-permute.

    Bin averaging shrinks the noise standard deviation by a factor of h, so
    the penalty applied on the bin grid is lam / h.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if h < 1:
        raise InputError(f"bandwidth h must be >= 1, got {h}")
    deg = A.sum(axis=0)
    order = np.lexsort((np.arange(n), deg))
    Ap = A[np.ix_(order, order)]
    # bin b = min(i // h, last) so a short tail merges into the final bin
    nb = max(n // h, 1)
    bins = np.minimum(np.arange(n) // h, nb - 1)
    B = np.zeros((nb, n))
    B[bins, np.arange(n)] = 1.0
    sums = B @ Ap @ B.T
    cnt = np.bincount(bins, minlength=nb).astype(float)
    counts = cnt[:, None] * cnt[None, :]
    np.fill_diagonal(counts, cnt * np.maximum(cnt - 1.0, 1.0))
    H = sums / counts
    if nb >= 3 and lam > 0:
        result = pgfl(H, chain_graph(nb), lam / h, eta=eta,
                      stop_ratio=stop_ratio, max_iter=max_iter,
                      estimate_mode="average", clamp=True, threads=threads)
        H = result.P_hat
    P = clamp_unit(H[np.ix_(bins, bins)])
    inv = np.empty(n, dtype=np.int64)
    inv[order] = np.arange(n)
    return P[np.ix_(inv, inv)]
