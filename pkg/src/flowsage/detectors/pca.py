"""Principal-component anomaly scoring on the training correlation matrix.

Columns are standardized with train statistics, the correlation matrix is
eigendecomposed, and a sample's score is the sum over the top q components
of (projection)^2 / eigenvalue. At full rank this equals the squared
Mahalanobis distance to the training distribution; zero-variance columns
are dropped with a warning before fitting.
"""

from __future__ import annotations

import warnings

import numpy as np

from .base import Detector, check_matrix


class PCADetector(Detector):
    kind = "pca"

    def __init__(self, n_components: int):
        super().__init__()
        if n_components < 1:
            raise ValueError(f"n_components must be >= 1, got {n_components}")
        self.n_components = n_components
        self.kept_columns: np.ndarray | None = None
        self.mean: np.ndarray | None = None
        self.std: np.ndarray | None = None
        self.eigenvalues: np.ndarray | None = None
        self.eigenvectors: np.ndarray | None = None   # columns, leading first

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        return (X[:, self.kept_columns] - self.mean) / self.std

    def fit(self, X: np.ndarray) -> "PCADetector":
        X = check_matrix(X)
        if X.shape[0] < 2:
            raise ValueError("need at least 2 training rows")
        self.input_dim = X.shape[1]

        std = X.std(axis=0)
        keep = std > 0.0
        if not keep.all():
            warnings.warn(
                f"pca: dropping {int((~keep).sum())} zero-variance column(s)",
                stacklevel=2,
            )
        if not keep.any():
            raise ValueError("all columns have zero variance")
        self.kept_columns = np.flatnonzero(keep)
        self.mean = X[:, self.kept_columns].mean(axis=0)
        self.std = std[self.kept_columns]

        Z = self._standardize(X)
        corr = (Z.T @ Z) / Z.shape[0]
        eigenvalues, eigenvectors = np.linalg.eigh(corr)
        order = np.argsort(eigenvalues)[::-1]
        eigenvalues, eigenvectors = eigenvalues[order], eigenvectors[:, order]

        rank = int((eigenvalues > 1e-10 * eigenvalues[0]).sum())
        if self.n_components > rank:
            raise ValueError(f"n_components {self.n_components} exceeds rank {rank}")
        self.eigenvalues = eigenvalues[: self.n_components]
        self.eigenvectors = eigenvectors[:, : self.n_components]
        return self

    def score_rows(self, X: np.ndarray) -> np.ndarray:
        if self.eigenvalues is None:
            raise RuntimeError("detector not fitted")
        Z = self._standardize(check_matrix(X, self.input_dim))
        Y = Z @ self.eigenvectors
        return (Y * Y / self.eigenvalues).sum(axis=1)
