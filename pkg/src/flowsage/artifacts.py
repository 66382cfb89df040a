"""Versioned on-disk artifacts with byte-identical round trips.

One container format for everything array-shaped: a magic + version header,
a canonical JSON block (sorted keys, no timestamps), then each array's raw
little-endian bytes in header order. Rewriting the same payload always
produces the same bytes, which is what the pipeline's determinism and
lineage guarantees rest on.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .detectors import (
    CBLOFDetector,
    Detector,
    HBOSDetector,
    IsolationForestDetector,
    PCADetector,
)
from .detectors.iforest import _Tree
from .encoder import EncoderConfig, EncoderParams
from .graph import FlowGraph
from .tensor import Tensor
from .trainer import DiscriminatorParams, TrainConfig

MAGIC = b"FSG1"
FORMAT_VERSION = 1

_DTYPES = {"float64": "<f8", "int64": "<i8"}


class ArtifactError(ValueError):
    pass


class MissingArtifactError(FileNotFoundError):
    def __init__(self, path, what: str):
        super().__init__(f"missing {what}: {path}")
        self.path = str(path)
        self.what = what


def write_arrays(path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    """Write named arrays + JSON-safe meta; array order follows insertion order."""
    entries = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype == np.float64:
            dtype = "float64"
        elif arr.dtype == np.int64:
            dtype = "int64"
        else:
            raise ArtifactError(f"array {name!r}: unsupported dtype {arr.dtype}")
        entries.append({"name": name, "dtype": dtype, "shape": list(arr.shape)})
        blobs.append(arr.astype(_DTYPES[dtype]).tobytes(order="C"))
    header = json.dumps({"meta": meta, "arrays": entries},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HI", FORMAT_VERSION, len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def read_arrays(path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(path, "artifact")
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ArtifactError(f"{path}: not a flowsage artifact")
        version, header_len = struct.unpack("<HI", fh.read(6))
        if version != FORMAT_VERSION:
            raise ArtifactError(f"{path}: unsupported format version {version}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 8)
            arrays[entry["name"]] = np.frombuffer(raw, dtype=_DTYPES[entry["dtype"]]).reshape(shape).copy()
    return arrays, header["meta"]


def config_hash(config_dict: dict) -> str:
    """Stable hash of a config mapping (callers exclude location-only fields)."""
    canonical = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def check_lineage(meta: dict, expected_hash: str, expected_seed: int, path) -> None:
    if meta.get("config_hash") != expected_hash or meta.get("seed") != expected_seed:
        raise ArtifactError(
            f"{path}: lineage mismatch (artifact config_hash={meta.get('config_hash')!r} "
            f"seed={meta.get('seed')!r}, expected {expected_hash!r} seed {expected_seed})"
        )


# --- graph -----------------------------------------------------------------

def save_graph(path, graph: FlowGraph, lineage: dict) -> None:
    arrays = {
        "src": graph.src,
        "dst": graph.dst,
        "feature_row": graph.feature_row,
        "flow_id": graph.flow_id,
        "edge_features": graph.edge_features,
        "node_features": graph.node_features,
    }
    if graph.flow_labels is not None:
        arrays["flow_labels"] = graph.flow_labels
    meta = dict(lineage)
    meta["kind"] = "flow_graph"
    meta["node_keys"] = graph.node_keys
    write_arrays(path, arrays, meta)


def load_graph(path) -> tuple[FlowGraph, dict]:
    arrays, meta = read_arrays(path)
    if meta.get("kind") != "flow_graph":
        raise ArtifactError(f"{path}: not a graph artifact")
    graph = FlowGraph(
        node_keys=list(meta["node_keys"]),
        src=arrays["src"],
        dst=arrays["dst"],
        feature_row=arrays["feature_row"],
        flow_id=arrays["flow_id"],
        edge_features=arrays["edge_features"],
        node_features=arrays["node_features"],
        flow_labels=arrays.get("flow_labels"),
    )
    return graph, meta


# --- checkpoint -------------------------------------------------------------

def save_checkpoint(path, enc: EncoderParams, disc: DiscriminatorParams,
                    enc_cfg: EncoderConfig, train_cfg: TrainConfig, lineage: dict) -> None:
    arrays = {name: t.data for name, t in enc.named().items()}
    arrays["discriminator.w"] = disc.w.data
    meta = dict(lineage)
    meta["kind"] = "checkpoint"
    meta["encoder_config"] = {"input_dim": enc_cfg.input_dim,
                              "hidden_dim": enc_cfg.hidden_dim,
                              "depth": enc_cfg.depth}
    meta["train_config"] = {"epochs": train_cfg.epochs, "lr": train_cfg.lr,
                            "seed": train_cfg.seed,
                            "readout_source": train_cfg.readout_source}
    write_arrays(path, arrays, meta)


def load_checkpoint(path) -> tuple[EncoderParams, DiscriminatorParams, EncoderConfig, TrainConfig, dict]:
    arrays, meta = read_arrays(path)
    if meta.get("kind") != "checkpoint":
        raise ArtifactError(f"{path}: not a checkpoint artifact")
    enc_cfg = EncoderConfig(**meta["encoder_config"])
    train_cfg = TrainConfig(**meta["train_config"])
    weights = []
    for k in range(enc_cfg.depth):
        weights.append(Tensor(arrays[f"encoder.W{k + 1}"], requires_grad=True,
                              name=f"encoder.W{k + 1}"))
    enc = EncoderParams(weights=weights)
    disc = DiscriminatorParams(w=Tensor(arrays["discriminator.w"], requires_grad=True,
                                        name="discriminator.w"))
    return enc, disc, enc_cfg, train_cfg, meta


# --- edge-row matrices (embeddings or raw features) -------------------------

def save_edge_matrix(path, matrix: np.ndarray, edge_labels: np.ndarray | None,
                     input_kind: str, lineage: dict) -> None:
    arrays = {"matrix": np.asarray(matrix, dtype=np.float64)}
    if edge_labels is not None:
        arrays["edge_labels"] = np.asarray(edge_labels, dtype=np.int64)
    meta = dict(lineage)
    meta["kind"] = "edge_matrix"
    meta["input_kind"] = input_kind
    write_arrays(path, arrays, meta)


def load_edge_matrix(path) -> tuple[np.ndarray, np.ndarray | None, dict]:
    arrays, meta = read_arrays(path)
    if meta.get("kind") != "edge_matrix":
        raise ArtifactError(f"{path}: not an edge-matrix artifact")
    return arrays["matrix"], arrays.get("edge_labels"), meta


# --- detectors ---------------------------------------------------------------

def save_detector(path, model: Detector, lineage: dict) -> None:
    meta = dict(lineage)
    meta["kind"] = "detector"
    meta["detector_kind"] = model.kind
    meta["contamination"] = model.contamination
    meta["threshold"] = model.threshold
    meta["input_dim"] = model.input_dim
    arrays: dict[str, np.ndarray] = {}
    if isinstance(model, PCADetector):
        meta["n_components"] = model.n_components
        arrays = {"kept_columns": model.kept_columns, "mean": model.mean,
                  "std": model.std, "eigenvalues": model.eigenvalues,
                  "eigenvectors": model.eigenvectors}
    elif isinstance(model, IsolationForestDetector):
        meta["n_estimators"] = model.n_estimators
        meta["seed"] = model.seed
        meta["subsample_size"] = model.subsample_size
        for i, tree in enumerate(model.trees):
            arrays[f"tree{i}.feature"] = tree.feature
            arrays[f"tree{i}.threshold"] = tree.threshold
            arrays[f"tree{i}.left"] = tree.left
            arrays[f"tree{i}.right"] = tree.right
            arrays[f"tree{i}.credit"] = tree.credit
    elif isinstance(model, CBLOFDetector):
        meta["n_clusters"] = model.n_clusters
        meta["seed"] = model.seed
        meta["alpha"] = model.alpha
        meta["beta"] = model.beta
        meta["weighted"] = model.weighted
        arrays = {"centroids": model.centroids,
                  "cluster_sizes": model.cluster_sizes.astype(np.int64),
                  "large_clusters": model.large_clusters.astype(np.int64)}
    elif isinstance(model, HBOSDetector):
        meta["n_bins"] = model.n_bins
        arrays = {"minima": model.minima, "maxima": model.maxima,
                  "heights": model.heights}
    else:
        raise ArtifactError(f"cannot serialize detector kind {model.kind!r}")
    write_arrays(path, arrays, meta)


def load_detector(path) -> tuple[Detector, dict]:
    arrays, meta = read_arrays(path)
    if meta.get("kind") != "detector":
        raise ArtifactError(f"{path}: not a detector artifact")
    kind = meta["detector_kind"]
    model: Detector
    if kind == "pca":
        model = PCADetector(meta["n_components"])
        model.kept_columns = arrays["kept_columns"]
        model.mean = arrays["mean"]
        model.std = arrays["std"]
        model.eigenvalues = arrays["eigenvalues"]
        model.eigenvectors = arrays["eigenvectors"]
    elif kind == "iforest":
        model = IsolationForestDetector(meta["n_estimators"], seed=meta["seed"])
        model.subsample_size = meta["subsample_size"]
        model.trees = []
        for i in range(meta["n_estimators"]):
            tree = _Tree()
            tree.feature = arrays[f"tree{i}.feature"]
            tree.threshold = arrays[f"tree{i}.threshold"]
            tree.left = arrays[f"tree{i}.left"]
            tree.right = arrays[f"tree{i}.right"]
            tree.credit = arrays[f"tree{i}.credit"]
            model.trees.append(tree)
    elif kind == "cblof":
        model = CBLOFDetector(meta["n_clusters"], seed=meta["seed"],
                              alpha=meta["alpha"], beta=meta["beta"],
                              weighted=meta["weighted"])
        model.centroids = arrays["centroids"]
        model.cluster_sizes = arrays["cluster_sizes"]
        model.large_clusters = arrays["large_clusters"]
    elif kind == "hbos":
        model = HBOSDetector(meta["n_bins"])
        model.minima = arrays["minima"]
        model.maxima = arrays["maxima"]
        model.heights = arrays["heights"]
    else:
        raise ArtifactError(f"{path}: unknown detector kind {kind!r}")
    model.contamination = meta["contamination"]
    model.threshold = meta["threshold"]
    model.input_dim = meta["input_dim"]
    return model, meta
