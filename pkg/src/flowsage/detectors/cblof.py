"""Cluster-based local outlier factor on seeded k-means clusters.

Clusters are sorted by size and partitioned into large and small at the
first index where the cumulative size reaches alpha * N or the size ratio
to the next cluster reaches beta. A sample in a large cluster scores its
distance to its own centroid; a sample in a small cluster scores its
distance to the nearest large-cluster centroid. Scores are unweighted by
default; `weighted=True` multiplies by the own cluster's size.
"""

from __future__ import annotations

import numpy as np

from .base import Detector, check_matrix

KMEANS_MAX_ITER = 100


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: distance-squared-proportional centroid draws."""
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]), dtype=np.float64)
    centroids[0] = X[rng.integers(n)]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[i:] = X[rng.integers(n, size=k - i)]
            break
        probs = d2 / total
        centroids[i] = X[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((X - centroids[i]) ** 2).sum(axis=1))
    return centroids


def kmeans(X: np.ndarray, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd iterations (100 cap) from a k-means++ start; returns (centroids, assignment).

    An emptied cluster is re-seeded once to the point farthest from its
    assigned centroid; a second emptying is an error.
    """
    rng = np.random.default_rng([seed, 23])
    centroids = _kmeans_pp_init(X, k, rng)
    reseeded = set()
    assignment = np.zeros(X.shape[0], dtype=np.int64)
    for _ in range(KMEANS_MAX_ITER):
        d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assignment = d2.argmin(axis=1)
        new_centroids = centroids.copy()
        moved = False
        for c in range(k):
            members = assignment == c
            if members.any():
                mean = X[members].mean(axis=0)
                if not np.array_equal(mean, centroids[c]):
                    moved = True
                new_centroids[c] = mean
            else:
                if c in reseeded:
                    raise ValueError(f"k-means cluster {c} emptied twice")
                reseeded.add(c)
                own_dist = ((X - centroids[assignment]) ** 2).sum(axis=1)
                new_centroids[c] = X[own_dist.argmax()]
                moved = True
        centroids = new_centroids
        if not moved:
            break
    d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return centroids, d2.argmin(axis=1)


class CBLOFDetector(Detector):
    kind = "cblof"

    def __init__(self, n_clusters: int, seed: int = 0,
                 alpha: float = 0.9, beta: float = 5.0, weighted: bool = False):
        super().__init__()
        if n_clusters < 2:
            raise ValueError(f"n_clusters must be >= 2, got {n_clusters}")
        self.n_clusters = n_clusters
        self.seed = seed
        self.alpha = alpha
        self.beta = beta
        self.weighted = weighted
        self.centroids: np.ndarray | None = None
        self.cluster_sizes: np.ndarray | None = None
        self.large_clusters: np.ndarray | None = None

    def fit(self, X: np.ndarray) -> "CBLOFDetector":
        X = check_matrix(X)
        n = X.shape[0]
        if self.n_clusters > n:
            raise ValueError(f"n_clusters {self.n_clusters} exceeds {n} rows")
        self.input_dim = X.shape[1]

        self.centroids, assignment = kmeans(X, self.n_clusters, self.seed)
        self.cluster_sizes = np.bincount(assignment, minlength=self.n_clusters)

        order = np.argsort(-self.cluster_sizes, kind="stable")
        sizes = self.cluster_sizes[order]
        boundary = self.n_clusters   # exclusive index into `order`
        cum = 0
        for i in range(self.n_clusters):
            cum += sizes[i]
            if cum >= self.alpha * n:
                boundary = i + 1
                break
            if i + 1 < self.n_clusters and sizes[i + 1] > 0 and sizes[i] / sizes[i + 1] >= self.beta:
                boundary = i + 1
                break
        self.large_clusters = np.sort(order[:boundary])
        return self

    def score_rows(self, X: np.ndarray) -> np.ndarray:
        if self.centroids is None:
            raise RuntimeError("detector not fitted")
        X = check_matrix(X, self.input_dim)
        d = np.sqrt(((X[:, None, :] - self.centroids[None, :, :]) ** 2).sum(axis=2))
        own = d.argmin(axis=1)
        is_large = np.isin(own, self.large_clusters)
        nearest_large = d[:, self.large_clusters].min(axis=1)
        scores = np.where(is_large, d[np.arange(X.shape[0]), own], nearest_large)
        if self.weighted:
            scores = scores * self.cluster_sizes[own]
        return scores
