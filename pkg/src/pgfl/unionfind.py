"""Union-find with path halving and union by size.

Sized for streaming over the 2*n*m Cartesian-square edges of a predictor
graph: O(n^2) memory for the forest, near-O(1) per edge.
"""

import numpy as np


class UnionFind:
    def __init__(self, size: int):
        self.parent = np.arange(size, dtype=np.int64)
        self.size = np.ones(size, dtype=np.int64)
        self.num_components = size

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]  # path halving
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.num_components -= 1
        return True

    def union_batch(self, a: np.ndarray, b: np.ndarray) -> None:
        """Union element-wise pairs from two index arrays."""
        for x, y in zip(a.tolist(), b.tolist()):
            self.union(x, y)

    def labels(self) -> np.ndarray:
        """Compact component labels in order of first element occurrence."""
        n = len(self.parent)
        out = np.empty(n, dtype=np.int64)
        remap = {}
        for x in range(n):
            r = self.find(x)
            if r not in remap:
                remap[r] = len(remap)
            out[x] = remap[r]
        return out
