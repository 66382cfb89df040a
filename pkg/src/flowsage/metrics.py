"""Binary detection metrics and raw-vs-embeddings comparison tables.

Attack (label 1) is the positive class; detection rate is attack-class
recall. A class with zero support and zero predictions gets F1 = 0 (logged),
keeping macro F1 total and deterministic.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsRow:
    accuracy: float
    macro_f1: float
    detection_rate: float
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass(frozen=True)
class ReportRow:
    detector: str
    input_kind: str   # "raw" or "embeddings"
    metrics: MetricsRow


def _f1(tp: int, fp: int, fn: int) -> float:
    if tp == 0 and fp == 0 and fn == 0:
        logger.info("class with zero support and zero predictions: F1 defined as 0")
        return 0.0
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def metrics(flags, labels) -> MetricsRow:
    """Accuracy, macro F1, and detection rate from {0,1} flags vs {0,1} labels."""
    flags = np.asarray(flags, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if flags.shape != labels.shape:
        raise ValueError(f"flags shape {flags.shape} != labels shape {labels.shape}")
    if flags.size == 0:
        raise ValueError("cannot compute metrics on empty inputs")
    bad = set(np.unique(flags)) | set(np.unique(labels))
    if not bad <= {0, 1}:
        raise ValueError(f"flags/labels must be binary, saw values {sorted(bad)}")

    tp = int(np.sum((flags == 1) & (labels == 1)))
    fp = int(np.sum((flags == 1) & (labels == 0)))
    tn = int(np.sum((flags == 0) & (labels == 0)))
    fn = int(np.sum((flags == 0) & (labels == 1)))
    n = tp + fp + tn + fn

    accuracy = (tp + tn) / n
    detection_rate = tp / (tp + fn) if (tp + fn) else 0.0
    macro_f1 = (_f1(tp, fp, fn) + _f1(tn, fn, fp)) / 2.0
    return MetricsRow(accuracy=accuracy, macro_f1=macro_f1, detection_rate=detection_rate,
                      tp=tp, fp=fp, tn=tn, fn=fn)


@dataclass(frozen=True)
class ComparisonRow:
    detector: str
    raw: MetricsRow
    embeddings: MetricsRow

    @property
    def deltas(self) -> tuple[float, float, float]:
        return (self.embeddings.accuracy - self.raw.accuracy,
                self.embeddings.macro_f1 - self.raw.macro_f1,
                self.embeddings.detection_rate - self.raw.detection_rate)


def compare(raw_rows: list[ReportRow], embedding_rows: list[ReportRow]) -> list[ComparisonRow]:
    """Pair up per-detector rows side by side; detector sets must match."""
    raw_by = {r.detector: r.metrics for r in raw_rows}
    emb_by = {r.detector: r.metrics for r in embedding_rows}
    if set(raw_by) != set(emb_by):
        raise ValueError(f"detector sets differ: {sorted(raw_by)} vs {sorted(emb_by)}")
    return [ComparisonRow(detector=d, raw=raw_by[d], embeddings=emb_by[d])
            for d in raw_by]


_COLUMNS = ("accuracy", "macro_f1", "detection_rate")


def comparison_csv(rows: list[ComparisonRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["detector"]
                    + [f"raw_{c}" for c in _COLUMNS]
                    + [f"embeddings_{c}" for c in _COLUMNS]
                    + [f"delta_{c}" for c in _COLUMNS])
    for row in rows:
        writer.writerow([row.detector]
                        + [repr(getattr(row.raw, c)) for c in _COLUMNS]
                        + [repr(getattr(row.embeddings, c)) for c in _COLUMNS]
                        + [repr(d) for d in row.deltas])
    return buf.getvalue()


def comparison_text(rows: list[ComparisonRow]) -> str:
    """Aligned table with Acc / Macro F1 / DR column pairs, values in percent."""
    header = (f"{'':10s} | {'Raw Features':^26s} | {'Embeddings':^26s}\n"
              f"{'detector':10s} | {'Acc':>8s}{'MacroF1':>9s}{'DR':>8s}  "
              f"| {'Acc':>8s}{'MacroF1':>9s}{'DR':>8s}")
    lines = [header, "-" * len(header.splitlines()[1])]
    for row in rows:
        r, e = row.raw, row.embeddings
        lines.append(
            f"{row.detector:10s} | {100 * r.accuracy:7.2f}%{100 * r.macro_f1:8.2f}%"
            f"{100 * r.detection_rate:7.2f}%  "
            f"| {100 * e.accuracy:7.2f}%{100 * e.macro_f1:8.2f}%"
            f"{100 * e.detection_rate:7.2f}%"
        )
    return "\n".join(lines) + "\n"


def report_jsonl(rows: list[ReportRow]) -> str:
    out = []
    for row in rows:
        payload = {"detector": row.detector, "input_kind": row.input_kind}
        payload.update(asdict(row.metrics))
        out.append(json.dumps(payload, sort_keys=True))
    return "\n".join(out) + "\n"
