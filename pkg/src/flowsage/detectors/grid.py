"""Exhaustive parameter x contamination grid with labelled-validation selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..metrics import metrics
from .base import Detector, predict

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    """Per-detector parameter lists plus the shared contamination list."""

    pca_n_components: tuple[int, ...] = (8,)
    iforest_n_estimators: tuple[int, ...] = (100,)
    cblof_n_clusters: tuple[int, ...] = (8,)
    hbos_n_bins: tuple[int, ...] = (10,)
    contamination: tuple[float, ...] = (0.04,)

    def __post_init__(self):
        for name in ("pca_n_components", "iforest_n_estimators", "cblof_n_clusters",
                     "hbos_n_bins", "contamination"):
            if not getattr(self, name):
                raise ValueError(f"grid list {name} must be nonempty")

    def params_for(self, kind: str) -> tuple[int, ...]:
        return {
            "pca": self.pca_n_components,
            "iforest": self.iforest_n_estimators,
            "cblof": self.cblof_n_clusters,
            "hbos": self.hbos_n_bins,
        }[kind]


@dataclass
class GridCell:
    kind: str
    param: int
    contamination: float
    accuracy: float = float("nan")
    macro_f1: float = float("nan")
    detection_rate: float = float("nan")
    error: str = ""
    model: Detector | None = field(default=None, repr=False)


@dataclass
class GridResult:
    best: Detector
    best_cell: GridCell
    cells: list[GridCell]


def grid_search(
    fit_fn: Callable[[np.ndarray, int, float], Detector],
    kind: str,
    grid: GridSpec,
    train: np.ndarray,
    validation: np.ndarray,
    validation_labels: np.ndarray,
) -> GridResult:
    """Fit every (param, contamination) cell and pick the best by validation Macro F1.

    Ties break toward higher detection rate, then smaller parameter, then
    smaller contamination. Cells whose fit raises are recorded with the error
    and skipped; if every cell fails the search fails.
    """
    if len(validation) != len(validation_labels):
        raise ValueError("validation rows and labels differ in length")
    cells: list[GridCell] = []
    for param in grid.params_for(kind):
        for contamination in grid.contamination:
            cell = GridCell(kind=kind, param=param, contamination=contamination)
            try:
                model = fit_fn(train, param, contamination)
                _, flags = predict(model, validation)
                row = metrics(flags, validation_labels)
                cell.accuracy = row.accuracy
                cell.macro_f1 = row.macro_f1
                cell.detection_rate = row.detection_rate
                cell.model = model
            except (ValueError, RuntimeError) as exc:
                cell.error = str(exc)
                logger.warning("grid cell %s(param=%d, contamination=%g) failed: %s",
                               kind, param, contamination, exc)
            cells.append(cell)

    scored = [c for c in cells if not c.error]
    if not scored:
        raise ValueError(f"every grid cell failed for detector {kind!r}")
    best_cell = min(scored, key=lambda c: (-c.macro_f1, -c.detection_rate,
                                           c.param, c.contamination))
    return GridResult(best=best_cell.model, best_cell=best_cell, cells=cells)
