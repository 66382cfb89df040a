"""Isolation forest with the classic path-length normalization.

Trees are grown on seeded subsamples of size psi = min(256, N) up to a
height limit of ceil(log2(psi)); a point terminating early in a node of m
samples gets a path-length credit c(m), where c uses the harmonic-number
approximation H(n) ~ ln(n) + Euler-Mascheroni (exact for the tiny cases).
The anomaly score is 2^(-mean_path / c(psi)): higher = easier to isolate.
"""

from __future__ import annotations

import math

import numpy as np

from .base import Detector, check_matrix

EULER_GAMMA = 0.5772156649


def average_path_length(n: int) -> float:
    """c(n): expected unsuccessful-search path length in a BST of n points."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n


class _Tree:
    """Array-encoded isolation tree (left < 0 marks a terminal node)."""

    __slots__ = ("feature", "threshold", "left", "right", "credit")

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.credit: list[float] = []

    def grow(self, X: np.ndarray, rows: np.ndarray, depth: int, limit: int,
             rng: np.random.Generator) -> int:
        node = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.credit.append(0.0)

        sub = X[rows]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        splittable = np.flatnonzero(hi > lo)
        if depth >= limit or rows.size <= 1 or splittable.size == 0:
            self.credit[node] = average_path_length(rows.size)
            return node

        f = int(splittable[rng.integers(splittable.size)])
        t = float(rng.uniform(lo[f], hi[f]))
        go_left = X[rows, f] < t
        self.feature[node] = f
        self.threshold[node] = t
        self.left[node] = self.grow(X, rows[go_left], depth + 1, limit, rng)
        self.right[node] = self.grow(X, rows[~go_left], depth + 1, limit, rng)
        return node

    def finalize(self) -> None:
        self.feature = np.array(self.feature, dtype=np.int64)
        self.threshold = np.array(self.threshold, dtype=np.float64)
        self.left = np.array(self.left, dtype=np.int64)
        self.right = np.array(self.right, dtype=np.int64)
        self.credit = np.array(self.credit, dtype=np.float64)

    def path_lengths(self, X: np.ndarray) -> np.ndarray:
        """Vectorized root-to-termination walk for every row."""
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        depth = np.zeros(n, dtype=np.float64)
        active = self.left[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            cur = node[idx]
            vals = X[idx, self.feature[cur]]
            node[idx] = np.where(vals < self.threshold[cur], self.left[cur], self.right[cur])
            depth[idx] += 1.0
            active[idx] = self.left[node[idx]] >= 0
        return depth + self.credit[node]


class IsolationForestDetector(Detector):
    kind = "iforest"

    def __init__(self, n_estimators: int, seed: int = 0):
        super().__init__()
        if n_estimators < 1:
            raise ValueError(f"n_estimators must be >= 1, got {n_estimators}")
        self.n_estimators = n_estimators
        self.seed = seed
        self.subsample_size = 0
        self.trees: list[_Tree] = []

    def fit(self, X: np.ndarray) -> "IsolationForestDetector":
        X = check_matrix(X)
        n = X.shape[0]
        if n < 2:
            raise ValueError("need at least 2 training rows")
        self.input_dim = X.shape[1]
        self.subsample_size = min(256, n)
        limit = math.ceil(math.log2(self.subsample_size))
        self.trees = []
        for t in range(self.n_estimators):
            rng = np.random.default_rng([self.seed, 17, t])
            rows = rng.choice(n, size=self.subsample_size, replace=False)
            tree = _Tree()
            tree.grow(X, rows, 0, limit, rng)
            tree.finalize()
            self.trees.append(tree)
        return self

    def score_rows(self, X: np.ndarray) -> np.ndarray:
        if not self.trees:
            raise RuntimeError("detector not fitted")
        X = check_matrix(X, self.input_dim)
        total = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees:
            total += tree.path_lengths(X)
        mean_path = total / len(self.trees)
        return np.power(2.0, -mean_path / average_path_length(self.subsample_size))
