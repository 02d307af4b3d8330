"""Partition all n^2 dyads into segments of (approximately) constant value.

A Cartesian-square edge is kept active when the estimate agrees at its two
dyads up to a merge tolerance; the segments are the connected components of
the surviving power graph, computed with a streaming union-find over the
2*n*m power edges.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .graph import Graph, power_edge_blocks
from .unionfind import UnionFind


@dataclass
class DyadPartition:
    """Labels every dyad (i, j), linearized as i*n + j, with a segment id."""

    n: int
    label: np.ndarray  # length n^2, values 0..num_segments-1, no gaps
    num_segments: int
    segment_size: np.ndarray
    segment_mean: np.ndarray  # mean estimate value per segment

    def label_of(self, i: int, j: int) -> int:
        return int(self.label[i * self.n + j])

    def to_csv(self, path) -> None:
        n = self.n
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "segment_id"])
            for i in range(n):
                base = i * n
                for j in range(n):
                    w.writerow([i, j, int(self.label[base + j])])

    def summary(self) -> dict:
        return {
            "n": self.n,
            "num_segments": self.num_segments,
            "segments": [
                {"id": s, "size": int(self.segment_size[s]),
                 "mean": float(self.segment_mean[s])}
                for s in range(self.num_segments)
            ],
        }

    def to_summary_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")


def default_merge_tol(P_hat: np.ndarray) -> float:
    """1e-6 of the value range: solver output is equal only up to numerics."""
    rng = float(P_hat.max() - P_hat.min())
    return 1e-6 * rng


def segment_dyads(P_hat: np.ndarray, g: Graph, eps: float = None) -> DyadPartition:
    """Union power edges whose dyad values differ by at most eps; return the
    connected regions as a partition of all n^2 dyads (diagonal included)."""
    P_hat = np.asarray(P_hat, dtype=float)
    n = g.n
    if P_hat.shape != (n, n):
        raise InputError(
            f"dimension mismatch: estimate is {P_hat.shape}, graph has n={n}"
        )
    if eps is None:
        eps = default_merge_tol(P_hat)
    if eps < 0:
        raise InputError(f"merge tolerance must be >= 0, got {eps}")
    flat = P_hat.ravel()
    uf = UnionFind(n * n)
    for a, b in power_edge_blocks(g):
        active = np.abs(flat[a] - flat[b]) <= eps
        uf.union_batch(a[active], b[active])
    label = uf.labels()
    num = uf.num_components
    size = np.bincount(label, minlength=num)
    mean = np.bincount(label, weights=flat, minlength=num) / size
    return DyadPartition(
        n=n, label=label, num_segments=num, segment_size=size, segment_mean=mean
    )
