"""Four anomaly detectors over a common score/threshold/predict contract."""

from __future__ import annotations

import numpy as np

from .base import ANOMALY_FLAG, BENIGN_FLAG, Detector, check_matrix, predict
from .cblof import CBLOFDetector, kmeans
from .grid import GridCell, GridResult, GridSpec, grid_search
from .hbos import HBOSDetector
from .iforest import IsolationForestDetector
from .pca import PCADetector

DETECTOR_KINDS = ("pca", "iforest", "cblof", "hbos")


def fit_pca(X: np.ndarray, n_components: int, contamination: float) -> PCADetector:
    model = PCADetector(n_components).fit(X)
    model.finalize_threshold(model.score_rows(X), contamination)
    return model


def fit_iforest(X: np.ndarray, n_estimators: int, contamination: float,
                seed: int = 0) -> IsolationForestDetector:
    model = IsolationForestDetector(n_estimators, seed=seed).fit(X)
    model.finalize_threshold(model.score_rows(X), contamination)
    return model


def fit_cblof(X: np.ndarray, n_clusters: int, contamination: float,
              seed: int = 0, weighted: bool = False) -> CBLOFDetector:
    model = CBLOFDetector(n_clusters, seed=seed, weighted=weighted).fit(X)
    model.finalize_threshold(model.score_rows(X), contamination)
    return model


def fit_hbos(X: np.ndarray, n_bins: int, contamination: float) -> HBOSDetector:
    model = HBOSDetector(n_bins).fit(X)
    model.finalize_threshold(model.score_rows(X), contamination)
    return model


def fitter(kind: str, seed: int = 0):
    """(X, param, contamination) -> fitted detector, for grid search."""
    if kind == "pca":
        return fit_pca
    if kind == "iforest":
        return lambda X, p, c: fit_iforest(X, p, c, seed=seed)
    if kind == "cblof":
        return lambda X, p, c: fit_cblof(X, p, c, seed=seed)
    if kind == "hbos":
        return fit_hbos
    raise ValueError(f"unknown detector kind {kind!r}")


__all__ = [
    "ANOMALY_FLAG",
    "BENIGN_FLAG",
    "CBLOFDetector",
    "DETECTOR_KINDS",
    "Detector",
    "GridCell",
    "GridResult",
    "GridSpec",
    "HBOSDetector",
    "IsolationForestDetector",
    "PCADetector",
    "check_matrix",
    "fit_cblof",
    "fit_hbos",
    "fit_iforest",
    "fit_pca",
    "fitter",
    "grid_search",
    "kmeans",
    "predict",
]
