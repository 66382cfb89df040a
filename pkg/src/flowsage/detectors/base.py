"""Shared detector plumbing: score/threshold contract and prediction.

Every detector exposes `score_rows(X) -> scores` (higher = more anomalous)
and stores a decision threshold set to the (1 - contamination)-quantile of
its training scores (linear interpolation). A row is flagged anomalous when
its score is >= the threshold.
"""

from __future__ import annotations

import numpy as np

BENIGN_FLAG = 0
ANOMALY_FLAG = 1


def validate_contamination(contamination: float) -> None:
    if not (0.0 < contamination <= 0.5):
        raise ValueError(f"contamination must be in (0, 0.5], got {contamination}")


def contamination_threshold(train_scores: np.ndarray, contamination: float) -> float:
    validate_contamination(contamination)
    return float(np.quantile(train_scores, 1.0 - contamination))


def check_matrix(X: np.ndarray, expected_dim: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    if expected_dim is not None and X.shape[1] != expected_dim:
        raise ValueError(f"expected {expected_dim} columns, got {X.shape[1]}")
    return X


class Detector:
    """Base class: subclasses set `kind`, `contamination`, `threshold`, `input_dim`."""

    kind: str = ""

    def __init__(self):
        self.contamination: float = 0.0
        self.threshold: float = 0.0
        self.input_dim: int = 0

    def score_rows(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def finalize_threshold(self, train_scores: np.ndarray, contamination: float) -> None:
        self.contamination = contamination
        self.threshold = contamination_threshold(train_scores, contamination)


def predict(model: Detector, X_test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scores plus {0 benign, 1 anomaly} flags for each row (empty in, empty out)."""
    X_test = check_matrix(X_test, model.input_dim)
    if X_test.shape[0] == 0:
        return np.zeros(0, dtype=np.float64), np.zeros(0, dtype=np.int64)
    scores = model.score_rows(X_test)
    if not np.all(np.isfinite(scores)):
        raise ValueError(f"{model.kind}: non-finite scores produced")
    flags = (scores >= model.threshold).astype(np.int64)
    return scores, flags
