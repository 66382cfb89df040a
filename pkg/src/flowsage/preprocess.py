"""Raw records → numeric edge-feature matrix.

Pipeline order: drop ports, encode categoricals (encoder fit on the train
split only), replace non-finite values with 0, L2-normalize each row.
Row order is preserved end to end so feature rows stay aligned with flows.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace

import numpy as np

from .ingest import ATTACK, DatasetSchema, FlowRecord

logger = logging.getLogger(__name__)

ENCODER_FORMAT_VERSION = 1


def drop_ports(record: FlowRecord) -> FlowRecord:
    """Null the port fields; IPs and the feature payload are untouched.

    Ports never enter the categorical/numeric payload, so this makes their
    absence from downstream feature vectors structural.
    """
    if record.src_port is None and record.dst_port is None:
        return record
    return replace(record, src_port=None, dst_port=None)


@dataclass
class FeatureEncoder:
    """Per-categorical-feature value → float64 code, fit on training data only.

    kind "frequency": code = (category count in train) / train size.
    kind "target": code = mean attack label of the category's train rows
    (requires labels; benchmark comparison path).
    Unseen categories at transform time map to the feature's fallback code,
    the unweighted mean of that feature's codes.
    """

    kind: str
    columns: tuple[str, ...]
    maps: dict[str, dict[str, float]]
    fallbacks: dict[str, float]
    fitted: bool = True

    def code_for(self, column: str, value: str) -> float:
        return self.maps[column].get(value, self.fallbacks[column])


@dataclass(frozen=True)
class Normalizer:
    """Row-wise L2 normalization; zero rows pass through unchanged."""

    kind: str = "l2"


def fit_encoder(
    train: list[FlowRecord],
    schema: DatasetSchema,
    kind: str = "frequency",
) -> FeatureEncoder:
    """Fit the categorical encoder on the training split.

    Raises on an empty train split, and on kind="target" without labels.
    """
    if not train:
        raise ValueError("cannot fit encoder on an empty training split")
    if kind not in ("frequency", "target"):
        raise ValueError(f"unknown encoder kind {kind!r}")

    n = len(train)
    maps: dict[str, dict[str, float]] = {}
    fallbacks: dict[str, float] = {}
    for j, column in enumerate(schema.categorical_cols):
        values = [r.categorical[j] for r in train]
        if kind == "frequency":
            counts: dict[str, int] = {}
            for v in values:
                counts[v] = counts.get(v, 0) + 1
            codes = {v: c / n for v, c in sorted(counts.items())}
        else:
            if any(r.label is None for r in train):
                raise ValueError("target encoding requires labelled training records")
            sums: dict[str, float] = {}
            counts = {}
            for r, v in zip(train, values):
                sums[v] = sums.get(v, 0.0) + (1.0 if r.label == ATTACK else 0.0)
                counts[v] = counts.get(v, 0) + 1
            codes = {v: sums[v] / counts[v] for v in sorted(counts)}
        maps[column] = codes
        fallbacks[column] = sum(codes.values()) / len(codes)
    return FeatureEncoder(kind=kind, columns=tuple(schema.categorical_cols),
                          maps=maps, fallbacks=fallbacks)


def l2_normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def transform(
    records: list[FlowRecord],
    schema: DatasetSchema,
    encoder: FeatureEncoder,
    normalizer: Normalizer = Normalizer(),
) -> np.ndarray:
    """Encode, sanitize, and normalize: one float64 row per record.

    Columns follow schema feature order with categoricals in place. NaN and
    ±inf become 0 before normalization; nonzero rows come out with unit
    Euclidean norm, zero rows stay zero.
    """
    if not encoder.fitted:
        raise ValueError("encoder must be fitted before transform")
    if normalizer.kind != "l2":
        raise ValueError(f"unknown normalizer kind {normalizer.kind!r}")

    cat_pos = {c: j for j, c in enumerate(schema.categorical_cols)}
    num_pos = {c: j for j, c in enumerate(schema.numeric_cols)}
    n, d = len(records), schema.payload_dim
    out = np.zeros((n, d), dtype=np.float64)
    for i, record in enumerate(records):
        for k, column in enumerate(schema.feature_order):
            if column in cat_pos:
                out[i, k] = encoder.code_for(column, record.categorical[cat_pos[column]])
            else:
                out[i, k] = record.numeric[num_pos[column]]
    np.nan_to_num(out, copy=False, nan=0.0, posinf=0.0, neginf=0.0)
    return l2_normalize_rows(out)


def save_encoder(encoder: FeatureEncoder, normalizer: Normalizer, path,
                 meta: dict | None = None) -> None:
    """Serialize encoder + normalizer as versioned JSON (bit-exact round trip)."""
    payload = {
        "format_version": ENCODER_FORMAT_VERSION,
        "meta": meta or {},
        "encoder": {
            "kind": encoder.kind,
            "columns": list(encoder.columns),
            "maps": encoder.maps,
            "fallbacks": encoder.fallbacks,
        },
        "normalizer": {"kind": normalizer.kind},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_encoder(path) -> tuple[FeatureEncoder, Normalizer, dict]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != ENCODER_FORMAT_VERSION:
        raise ValueError(f"unsupported encoder artifact version {version}")
    enc = payload["encoder"]
    encoder = FeatureEncoder(
        kind=enc["kind"],
        columns=tuple(enc["columns"]),
        maps={c: dict(m) for c, m in enc["maps"].items()},
        fallbacks=dict(enc["fallbacks"]),
    )
    return encoder, Normalizer(kind=payload["normalizer"]["kind"]), payload.get("meta", {})
