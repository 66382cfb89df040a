"""Histogram-based outlier score from per-feature equal-width histograms.

Each feature gets an equal-width histogram over its training range with
heights normalized so the fullest bin is 1; a sample's score adds
log(1 / height) over all features (natural log, empty bins floored at
1e-12). Out-of-range values use the nearest edge bin; a constant feature
is a single full bin contributing 0.
"""

from __future__ import annotations

import numpy as np

from .base import Detector, check_matrix

EMPTY_BIN_FLOOR = 1e-12


class HBOSDetector(Detector):
    kind = "hbos"

    def __init__(self, n_bins: int):
        super().__init__()
        if n_bins < 2:
            raise ValueError(f"n_bins must be >= 2, got {n_bins}")
        self.n_bins = n_bins
        self.minima: np.ndarray | None = None
        self.maxima: np.ndarray | None = None
        self.heights: np.ndarray | None = None   # [d x n_bins], max per row = 1

    def fit(self, X: np.ndarray) -> "HBOSDetector":
        X = check_matrix(X)
        if X.shape[0] < 1:
            raise ValueError("need at least 1 training row")
        self.input_dim = X.shape[1]
        self.minima = X.min(axis=0)
        self.maxima = X.max(axis=0)
        self.heights = np.zeros((self.input_dim, self.n_bins), dtype=np.float64)
        for j in range(self.input_dim):
            if self.maxima[j] == self.minima[j]:
                self.heights[j, :] = 1.0   # constant feature: one full bin, width irrelevant
                continue
            counts, _ = np.histogram(X[:, j], bins=self.n_bins,
                                     range=(self.minima[j], self.maxima[j]))
            self.heights[j] = counts / counts.max()
        return self

    def _bin_indices(self, X: np.ndarray) -> np.ndarray:
        span = self.maxima - self.minima
        span = np.where(span > 0, span, 1.0)
        raw = np.floor((X - self.minima) / span * self.n_bins).astype(np.int64)
        return np.clip(raw, 0, self.n_bins - 1)

    def score_rows(self, X: np.ndarray) -> np.ndarray:
        if self.heights is None:
            raise RuntimeError("detector not fitted")
        X = check_matrix(X, self.input_dim)
        idx = self._bin_indices(X)
        heights = self.heights[np.arange(self.input_dim)[None, :], idx]
        return np.log(1.0 / np.maximum(heights, EMPTY_BIN_FLOOR)).sum(axis=1)
