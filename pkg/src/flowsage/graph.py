"""Bidirectional multigraph over IP endpoints with per-flow edge features.

Each input flow yields two directed edges (forward and reverse) that share
one feature row content and one flow id; parallel flows stay distinct.
Node features are a constant all-ones matrix whose width equals the edge
feature width. Construction is order-deterministic: node indices follow
first appearance, edge order follows record order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .ingest import FlowRecord


@dataclass
class FlowGraph:
    node_keys: list[str]
    src: np.ndarray            # [2F] node index per directed edge
    dst: np.ndarray            # [2F]
    feature_row: np.ndarray    # [2F] row index into edge_features
    flow_id: np.ndarray        # [2F] originating flow per directed edge
    edge_features: np.ndarray  # [2F x d_e] float64
    node_features: np.ndarray  # [N x d_e] all ones
    flow_labels: np.ndarray | None = None   # [F] per-flow {0, 1}
    _in_edges: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def num_nodes(self) -> int:
        return len(self.node_keys)

    @property
    def num_edges(self) -> int:
        return self.src.shape[0]

    @property
    def num_flows(self) -> int:
        return self.num_edges // 2

    @property
    def feature_dim(self) -> int:
        return self.edge_features.shape[1]

    def edge_labels(self) -> np.ndarray | None:
        """Per-directed-edge labels inherited from the originating flow."""
        if self.flow_labels is None:
            return None
        return self.flow_labels[self.flow_id]


def build_graph_from_arrays(
    src_keys: list[str],
    dst_keys: list[str],
    features: np.ndarray,
    flow_labels: np.ndarray | None = None,
) -> FlowGraph:
    """Core constructor: one flow per (src_key, dst_key, feature row)."""
    n_flows = len(src_keys)
    features = np.ascontiguousarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != n_flows:
        raise ValueError(f"features must be [{n_flows} x d], got {features.shape}")
    if len(dst_keys) != n_flows:
        raise ValueError("src/dst key lists differ in length")
    if flow_labels is not None and len(flow_labels) != n_flows:
        raise ValueError("flow_labels length mismatch")

    index: dict[str, int] = {}
    for key in src_keys:
        if key not in index:
            index[key] = len(index)
    for key in dst_keys:
        if key not in index:
            index[key] = len(index)
    node_keys = list(index)

    d = features.shape[1]
    src = np.empty(2 * n_flows, dtype=np.int64)
    dst = np.empty(2 * n_flows, dtype=np.int64)
    flow_id = np.repeat(np.arange(n_flows, dtype=np.int64), 2)
    for f in range(n_flows):
        u, v = index[src_keys[f]], index[dst_keys[f]]
        src[2 * f], dst[2 * f] = u, v
        src[2 * f + 1], dst[2 * f + 1] = v, u
    edge_features = np.repeat(features, 2, axis=0)
    feature_row = np.arange(2 * n_flows, dtype=np.int64)

    return FlowGraph(
        node_keys=node_keys,
        src=src,
        dst=dst,
        feature_row=feature_row,
        flow_id=flow_id,
        edge_features=edge_features,
        node_features=np.ones((len(node_keys), d), dtype=np.float64),
        flow_labels=None if flow_labels is None else np.asarray(flow_labels, dtype=np.int64),
    )


def build_graph(records: list[FlowRecord], features: np.ndarray) -> FlowGraph:
    """Build the bidirectional flow graph from records and aligned feature rows."""
    if features.shape[0] != len(records):
        raise ValueError(f"{len(records)} records but {features.shape[0]} feature rows")
    labels = None
    if records and all(r.label is not None for r in records):
        labels = np.array([r.label for r in records], dtype=np.int64)
    return build_graph_from_arrays(
        [r.src_ip for r in records], [r.dst_ip for r in records], features, labels
    )


def in_neighbors(graph: FlowGraph, v: int) -> list[tuple[int, int]]:
    """All (source node, edge index) pairs of directed edges ending at v.

    Full neighborhood, ascending edge index; no sampling.
    """
    if not (0 <= v < graph.num_nodes):
        raise ValueError(f"node index {v} out of range")
    if graph._in_edges is None:
        buckets: list[list[int]] = [[] for _ in range(graph.num_nodes)]
        for e, d in enumerate(graph.dst):
            buckets[d].append(e)
        graph._in_edges = [np.array(b, dtype=np.int64) for b in buckets]
    return [(int(graph.src[e]), int(e)) for e in graph._in_edges[v]]


def permute_edge_features(graph: FlowGraph, permutation: np.ndarray) -> FlowGraph:
    """Same adjacency, edge-feature rows reordered by the given permutation.

    Adjacency arrays are shared with the input; only the feature matrix is new.
    """
    permutation = np.asarray(permutation, dtype=np.int64)
    if sorted(permutation.tolist()) != list(range(graph.num_edges)):
        raise ValueError("not a permutation of the edge indices")
    return FlowGraph(
        node_keys=graph.node_keys,
        src=graph.src,
        dst=graph.dst,
        feature_row=graph.feature_row,
        flow_id=graph.flow_id,
        edge_features=graph.edge_features[permutation],
        node_features=graph.node_features,
        flow_labels=graph.flow_labels,
    )


def dump_graph_csv(graph: FlowGraph, node_path, edge_path) -> None:
    """Debug dump: node table and edge table as CSV."""
    with open(node_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_index", "key"])
        for i, key in enumerate(graph.node_keys):
            writer.writerow([i, key])
    with open(edge_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["edge_index", "src", "dst", "feature_row", "flow_id"])
        for e in range(graph.num_edges):
            writer.writerow([e, graph.src[e], graph.dst[e],
                             graph.feature_row[e], graph.flow_id[e]])
