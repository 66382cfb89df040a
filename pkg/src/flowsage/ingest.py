"""NetFlow v2 CSV loading, downsampling, and train/test splitting.

Dataset schemas are shipped as built-in field lists; loading is header-driven,
so column order in the file does not matter as long as every schema column is
present. All sampling is seeded and pure: the same (records, seed) always
produces the same output.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

BENIGN = 0
ATTACK = 1

# Sub-stream tags so downsample/split draw from independent seeded streams.
_DOWNSAMPLE_TAG = 101
_SPLIT_TAG = 102


class MalformedRowError(ValueError):
    """A data row that cannot be parsed; carries the 1-based row index."""

    def __init__(self, row_index: int, message: str):
        super().__init__(f"row {row_index}: {message}")
        self.row_index = row_index


class UnknownSchemaError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetSchema:
    """Column layout of one dataset: endpoint keys, ports, features, labels."""

    name: str
    src_ip_col: str
    src_port_col: str
    dst_ip_col: str
    dst_port_col: str
    label_col: str
    attack_type_col: str
    categorical_cols: tuple[str, ...]
    numeric_cols: tuple[str, ...]
    # Feature columns in original file order (kind restored via the sets above).
    feature_order: tuple[str, ...]

    @property
    def payload_dim(self) -> int:
        """Width of the downstream feature vector (ports and IPs excluded)."""
        return len(self.feature_order)

    @property
    def total_feature_count(self) -> int:
        """Dataset feature count as conventionally quoted: IPs + ports + payload."""
        return self.payload_dim + 4


# NetFlow v2 feature columns shared by the NF-*-v2 datasets (45 CSV columns:
# 43 features including the 4 endpoint identifiers, plus Label and Attack).
_NFV2_CATEGORICAL = (
    "PROTOCOL",
    "L7_PROTO",
    "TCP_FLAGS",
    "CLIENT_TCP_FLAGS",
    "SERVER_TCP_FLAGS",
    "ICMP_TYPE",
    "ICMP_IPV4_TYPE",
    "DNS_QUERY_TYPE",
    "FTP_COMMAND_RET_CODE",
)

_NFV2_FEATURE_ORDER = (
    "PROTOCOL",
    "L7_PROTO",
    "IN_BYTES",
    "IN_PKTS",
    "OUT_BYTES",
    "OUT_PKTS",
    "TCP_FLAGS",
    "CLIENT_TCP_FLAGS",
    "SERVER_TCP_FLAGS",
    "FLOW_DURATION_MILLISECONDS",
    "DURATION_IN",
    "DURATION_OUT",
    "MIN_TTL",
    "MAX_TTL",
    "LONGEST_FLOW_PKT",
    "SHORTEST_FLOW_PKT",
    "MIN_IP_PKT_LEN",
    "MAX_IP_PKT_LEN",
    "SRC_TO_DST_SECOND_BYTES",
    "DST_TO_SRC_SECOND_BYTES",
    "RETRANSMITTED_IN_BYTES",
    "RETRANSMITTED_IN_PKTS",
    "RETRANSMITTED_OUT_BYTES",
    "RETRANSMITTED_OUT_PKTS",
    "SRC_TO_DST_AVG_THROUGHPUT",
    "DST_TO_SRC_AVG_THROUGHPUT",
    "NUM_PKTS_UP_TO_128_BYTES",
    "NUM_PKTS_128_TO_256_BYTES",
    "NUM_PKTS_256_TO_512_BYTES",
    "NUM_PKTS_512_TO_1024_BYTES",
    "NUM_PKTS_1024_TO_1514_BYTES",
    "TCP_WIN_MAX_IN",
    "TCP_WIN_MAX_OUT",
    "ICMP_TYPE",
    "ICMP_IPV4_TYPE",
    "DNS_QUERY_ID",
    "DNS_QUERY_TYPE",
    "DNS_TTL_ANSWER",
    "FTP_COMMAND_RET_CODE",
)

_NFV2_NUMERIC = tuple(c for c in _NFV2_FEATURE_ORDER if c not in _NFV2_CATEGORICAL)


def _nfv2_schema(name: str) -> DatasetSchema:
    return DatasetSchema(
        name=name,
        src_ip_col="IPV4_SRC_ADDR",
        src_port_col="L4_SRC_PORT",
        dst_ip_col="IPV4_DST_ADDR",
        dst_port_col="L4_DST_PORT",
        label_col="Label",
        attack_type_col="Attack",
        categorical_cols=_NFV2_CATEGORICAL,
        numeric_cols=_NFV2_NUMERIC,
        feature_order=_NFV2_FEATURE_ORDER,
    )


SCHEMAS: dict[str, DatasetSchema] = {
    "nf-unsw-nb15-v2": _nfv2_schema("nf-unsw-nb15-v2"),
    "nf-cse-cic-ids2018-v2": _nfv2_schema("nf-cse-cic-ids2018-v2"),
}


def get_schema(schema: str | DatasetSchema) -> DatasetSchema:
    if isinstance(schema, DatasetSchema):
        return schema
    try:
        return SCHEMAS[schema]
    except KeyError:
        known = ", ".join(sorted(SCHEMAS))
        raise UnknownSchemaError(f"unknown schema {schema!r}; known: {known}") from None


@dataclass(frozen=True)
class FlowRecord:
    """One NetFlow row: endpoint keys, port fields, feature payload, labels.

    `categorical` / `numeric` align with the schema's column tuples; empty
    numeric cells are NaN. Ports live outside the payload and are nulled by
    `preprocess.drop_ports`.
    """

    src_ip: str
    dst_ip: str
    src_port: int | None
    dst_port: int | None
    categorical: tuple[str, ...]
    numeric: tuple[float, ...]
    label: int | None = None
    attack_type: str | None = None


@dataclass(frozen=True)
class SplitSpec:
    """Downsample fraction, train fraction, contamination mode, and seed.

    contamination=None means the train side is benign-only (attack rows are
    displaced to test); contamination=c requests attack rows at proportion c
    of the train side.
    """

    downsample_fraction: float = 1.0
    train_fraction: float = 0.7
    contamination: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.downsample_fraction <= 1.0):
            raise ValueError(f"downsample_fraction must be in (0, 1], got {self.downsample_fraction}")
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.contamination is not None and not (0.0 < self.contamination < 1.0):
            raise ValueError(f"contamination must be in (0, 1), got {self.contamination}")


def _parse_float(cell: str) -> float:
    cell = cell.strip()
    if cell == "":
        return float("nan")
    return float(cell)


def _parse_port(cell: str) -> int | None:
    cell = cell.strip()
    if cell == "":
        return None
    return int(float(cell))


def load_csv(path, schema: str | DatasetSchema) -> list[FlowRecord]:
    """Parse a comma-separated, UTF-8, header-first NetFlow file.

    The label column may be absent (unlabeled deployment data); every other
    schema column must exist. Malformed rows raise MalformedRowError with the
    1-based data-row index.
    """
    sch = get_schema(schema)
    records: list[FlowRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        col = {name: i for i, name in enumerate(header)}

        required = [sch.src_ip_col, sch.src_port_col, sch.dst_ip_col, sch.dst_port_col]
        required += list(sch.feature_order)
        missing = [c for c in required if c not in col]
        if missing:
            raise ValueError(f"{path}: header missing schema columns {missing}")
        has_label = sch.label_col in col
        has_attack = sch.attack_type_col in col

        cat_idx = [col[c] for c in sch.categorical_cols]
        num_idx = [col[c] for c in sch.numeric_cols]
        si, spi, di, dpi = (col[sch.src_ip_col], col[sch.src_port_col],
                            col[sch.dst_ip_col], col[sch.dst_port_col])

        for row_index, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise MalformedRowError(row_index, f"expected {len(header)} cells, got {len(row)}")
            try:
                numeric = tuple(_parse_float(row[i]) for i in num_idx)
            except ValueError as exc:
                raise MalformedRowError(row_index, f"bad numeric value ({exc})") from None
            try:
                src_port = _parse_port(row[spi])
                dst_port = _parse_port(row[dpi])
            except ValueError:
                raise MalformedRowError(row_index, "bad port value") from None
            label: int | None = None
            if has_label and row[col[sch.label_col]].strip() != "":
                try:
                    label = int(float(row[col[sch.label_col]]))
                except ValueError:
                    raise MalformedRowError(row_index, "bad label value") from None
                if label not in (BENIGN, ATTACK):
                    raise MalformedRowError(row_index, f"label must be 0 or 1, got {label}")
            attack_type = row[col[sch.attack_type_col]].strip() if has_attack else None
            records.append(FlowRecord(
                src_ip=row[si].strip(),
                dst_ip=row[di].strip(),
                src_port=src_port,
                dst_port=dst_port,
                categorical=tuple(row[i].strip() for i in cat_idx),
                numeric=numeric,
                label=label,
                attack_type=attack_type or None,
            ))
    return records


def downsample(records: list[FlowRecord], spec: SplitSpec) -> list[FlowRecord]:
    """Uniform random subset of size round(fraction * N), original order kept."""
    n = len(records)
    k = round(spec.downsample_fraction * n)
    if k >= n:
        return list(records)
    rng = np.random.default_rng([spec.rng_seed, _DOWNSAMPLE_TAG])
    idx = np.sort(rng.choice(n, size=k, replace=False))
    return [records[i] for i in idx]


def split(records: list[FlowRecord], spec: SplitSpec) -> tuple[list[FlowRecord], list[FlowRecord]]:
    """Partition into train/test with sizes round(f*N) / N - round(f*N).

    With labels and contamination=None the train side is benign-only; with
    contamination=c the train side holds ceil(c * train_size) attack rows.
    Unlabeled records are only legal with contamination=None and split
    uniformly. The output multiset always equals the input.
    """
    n = len(records)
    train_size = round(spec.train_fraction * n)
    rng = np.random.default_rng([spec.rng_seed, _SPLIT_TAG])

    labels = [r.label for r in records]
    labeled = all(lab is not None for lab in labels) and n > 0

    if spec.contamination is not None and not labeled:
        raise ValueError("contamination split requires labelled records")

    if not labeled:
        idx = rng.permutation(n)
        train_idx = np.sort(idx[:train_size])
        test_idx = np.sort(idx[train_size:])
    else:
        benign_pool = np.array([i for i, lab in enumerate(labels) if lab == BENIGN], dtype=np.int64)
        attack_pool = np.array([i for i, lab in enumerate(labels) if lab == ATTACK], dtype=np.int64)
        if spec.contamination is None:
            n_attack_train = 0
        else:
            n_attack_train = math.ceil(spec.contamination * train_size)
        n_benign_train = train_size - n_attack_train
        if n_attack_train > len(attack_pool):
            raise ValueError(
                f"need {n_attack_train} attack rows for contamination "
                f"{spec.contamination}, only {len(attack_pool)} available"
            )
        if n_benign_train > len(benign_pool):
            raise ValueError(
                f"need {n_benign_train} benign rows for a train split of {train_size}, "
                f"only {len(benign_pool)} available"
            )
        benign_take = rng.choice(len(benign_pool), size=n_benign_train, replace=False)
        attack_take = (rng.choice(len(attack_pool), size=n_attack_train, replace=False)
                       if n_attack_train else np.array([], dtype=np.int64))
        train_idx = np.sort(np.concatenate([benign_pool[benign_take], attack_pool[attack_take]]))
        mask = np.ones(n, dtype=bool)
        mask[train_idx] = False
        test_idx = np.flatnonzero(mask)

    train = [records[i] for i in train_idx]
    test = [records[i] for i in test_idx]
    return train, test
