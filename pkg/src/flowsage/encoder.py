"""Edge-conditioned GraphSAGE-style encoder producing per-edge embeddings.

One (configurable) layer of mean aggregation over incoming edges, where each
message is the neighbor's state concatenated with the edge's features. Node
states start as all-ones vectors of the edge-feature width; an edge embedding
is the concatenation of its endpoints' final states, so its width is twice
the hidden size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .graph import FlowGraph
from .tensor import Tensor

_INIT_TAG = 7


@dataclass(frozen=True)
class EncoderConfig:
    input_dim: int
    hidden_dim: int = 128
    depth: int = 1

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.hidden_dim <= 0 or self.input_dim <= 0:
            raise ValueError("dimensions must be positive")

    @property
    def edge_dim(self) -> int:
        return 2 * self.hidden_dim

    def layer_shape(self, k: int) -> tuple[int, int]:
        """Weight shape of layer k (0-based): [(prev + prev + d_e) x hidden].

        The layer input is concat(own state, aggregated messages); a message
        is concat(neighbor state of width prev, edge features of width d_e).
        """
        prev = self.input_dim if k == 0 else self.hidden_dim
        return (prev + prev + self.input_dim, self.hidden_dim)


@dataclass
class EncoderParams:
    weights: list[Tensor] = field(default_factory=list)

    def named(self, prefix: str = "encoder") -> dict[str, Tensor]:
        return {f"{prefix}.W{k + 1}": w for k, w in enumerate(self.weights)}


def init_encoder_params(config: EncoderConfig, seed: int) -> EncoderParams:
    """Seeded uniform Glorot init for every layer weight."""
    weights = []
    for k in range(config.depth):
        rng = np.random.default_rng([seed, _INIT_TAG, k])
        shape = config.layer_shape(k)
        weights.append(Tensor(T.glorot_uniform(shape, rng), requires_grad=True,
                              name=f"encoder.W{k + 1}"))
    return EncoderParams(weights=weights)


def aggregate_neighborhood(graph: FlowGraph, v: int, h_prev: np.ndarray) -> np.ndarray:
    """Mean over incoming edges uv of concat(h_prev[u], e_uv), plain numpy.

    Zero vector of the correct width when v has no incoming edges. Serves as
    the per-node reference path for the vectorized encoder.
    """
    d_prev = h_prev.shape[1]
    width = d_prev + graph.feature_dim
    mask = graph.dst == v
    if not mask.any():
        return np.zeros(width, dtype=np.float64)
    rows = np.concatenate(
        [h_prev[graph.src[mask]], graph.edge_features[mask]], axis=1
    )
    return rows.mean(axis=0)


def encode_nodes(graph: FlowGraph, params: EncoderParams, config: EncoderConfig) -> Tensor:
    """Forward pass over all nodes: returns the final node-state matrix [N x hidden]."""
    if graph.feature_dim != config.input_dim:
        raise ValueError(
            f"graph feature width {graph.feature_dim} != config input_dim {config.input_dim}"
        )
    if len(params.weights) != config.depth:
        raise ValueError(f"expected {config.depth} weight matrices, got {len(params.weights)}")

    h = Tensor(graph.node_features)
    edge_feats = Tensor(graph.edge_features)
    for k in range(config.depth):
        w = params.weights[k]
        expected = config.layer_shape(k)
        if w.shape != expected:
            raise ValueError(f"layer {k + 1} weight shape {w.shape}, expected {expected}")
        messages = T.concat_cols(T.gather_rows(h, graph.src), edge_feats)
        aggregated = T.segment_mean(messages, graph.dst, graph.num_nodes)
        h = T.relu(T.matmul(T.concat_cols(h, aggregated), w))
    return h


def encode_edges(graph: FlowGraph, node_states: Tensor) -> Tensor:
    """Per-directed-edge embedding: concat(state[src], state[dst]), width 2*hidden."""
    out = T.concat_cols(
        T.gather_rows(node_states, graph.src),
        T.gather_rows(node_states, graph.dst),
    )
    assert out.shape == (graph.num_edges, 2 * node_states.shape[1])
    return out


def embed_graph(graph: FlowGraph, params: EncoderParams, config: EncoderConfig) -> np.ndarray:
    """Inference-only edge embeddings as a plain array."""
    return encode_edges(graph, encode_nodes(graph, params, config)).data
