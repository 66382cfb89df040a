"""Self-supervised training: corruption, readout, bilinear discriminator, BCE loss.

Each epoch draws a fresh corruption (edge-feature rows shuffled, adjacency
kept), encodes the true and corrupted graphs, summarizes the true graph, and
scores every edge embedding against that summary. True edges are pushed
toward score 1, corrupted edges toward 0; Adam updates both the encoder
weights and the discriminator's bilinear weight.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .encoder import EncoderConfig, EncoderParams, encode_edges, encode_nodes, init_encoder_params
from .graph import FlowGraph, permute_edge_features
from .optim import Adam
from .tensor import Tensor

logger = logging.getLogger(__name__)

SCORE_EPS = 1e-12

_CORRUPT_TAG = 11
_DISC_INIT_TAG = 13


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    lr: float = 0.003
    seed: int = 0
    readout_source: str = "edges"   # "edges" (default) or "nodes"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.readout_source not in ("edges", "nodes"):
            raise ValueError(f"readout_source must be 'edges' or 'nodes', got {self.readout_source!r}")


@dataclass
class DiscriminatorParams:
    """Bilinear weight scoring an embedding row against the graph summary."""

    w: Tensor

    def named(self) -> dict[str, Tensor]:
        return {"discriminator.w": self.w}


@dataclass
class TrainResult:
    encoder_params: EncoderParams
    discriminator_params: DiscriminatorParams
    loss_trace: list[float]
    adam_steps: int


def corrupt(graph: FlowGraph, seed: int | list[int]) -> FlowGraph:
    """Negative-sample graph: uniformly shuffled edge-feature rows, same adjacency."""
    rng = np.random.default_rng(seed)
    return permute_edge_features(graph, rng.permutation(graph.num_edges))


def readout(embeddings: Tensor) -> Tensor:
    """Graph summary: elementwise sigmoid of the column mean, shape [1 x d]."""
    if embeddings.data.ndim != 2 or embeddings.shape[0] == 0:
        raise ValueError("readout requires a nonempty embedding matrix")
    return T.sigmoid(T.row_mean(embeddings))


def discriminate(embeddings: Tensor, summary: Tensor, w: Tensor) -> Tensor:
    """Per-row score sigmoid(z @ w @ summary), shape [n x 1].

    Computed as z @ (w @ summary^T) so the cost is linear in the number of rows.
    """
    if w.shape != (embeddings.shape[1], summary.shape[1]):
        raise ValueError(
            f"discriminator weight shape {w.shape} incompatible with "
            f"embeddings {embeddings.shape} and summary {summary.shape}"
        )
    direction = T.matmul(w, T.transpose(summary))   # [emb_dim x 1]
    return T.sigmoid(T.matmul(embeddings, direction))


def dgi_loss(pos_scores: Tensor, neg_scores: Tensor) -> Tensor:
    """Binary cross-entropy with the 1/(2n) factor over n positive + n negative scores.

    Scores at exactly 0 or 1 are clamped to [eps, 1-eps] (logged), not an error.
    """
    n_pos, n_neg = pos_scores.shape[0], neg_scores.shape[0]
    if n_pos != n_neg or n_pos == 0:
        raise ValueError(f"need equal nonzero score counts, got {n_pos} and {n_neg}")
    if np.any(pos_scores.data <= SCORE_EPS) or np.any(neg_scores.data >= 1.0 - SCORE_EPS):
        logger.warning("discriminator scores clamped to [%g, %g] in loss", SCORE_EPS, 1 - SCORE_EPS)
    pos = T.clamp(pos_scores, SCORE_EPS, 1.0 - SCORE_EPS)
    neg = T.clamp(neg_scores, SCORE_EPS, 1.0 - SCORE_EPS)
    total = T.add(
        T.sum_all(T.log(pos)),
        T.sum_all(T.log(T.add_const(T.scale(neg, -1.0), 1.0))),
    )
    return T.scale(total, -1.0 / (2.0 * n_pos))


def init_discriminator(emb_dim: int, summary_dim: int, seed: int) -> DiscriminatorParams:
    rng = np.random.default_rng([seed, _DISC_INIT_TAG])
    w = Tensor(T.glorot_uniform((emb_dim, summary_dim), rng), requires_grad=True,
               name="discriminator.w")
    return DiscriminatorParams(w=w)


def _forward_scores(
    graph: FlowGraph,
    corrupted: FlowGraph,
    enc: EncoderParams,
    disc: DiscriminatorParams,
    enc_cfg: EncoderConfig,
    readout_source: str,
) -> tuple[Tensor, Tensor, Tensor]:
    """One epoch's forward pass: (pos scores, neg scores, summary)."""
    node_states = encode_nodes(graph, enc, enc_cfg)
    edge_emb = encode_edges(graph, node_states)
    corrupt_emb = encode_edges(corrupted, encode_nodes(corrupted, enc, enc_cfg))
    summary = readout(edge_emb if readout_source == "edges" else node_states)
    pos = discriminate(edge_emb, summary, disc.w)
    neg = discriminate(corrupt_emb, summary, disc.w)
    return pos, neg, summary


def train(
    graph: FlowGraph,
    encoder_config: EncoderConfig,
    train_config: TrainConfig,
) -> TrainResult:
    """Run the full self-supervised loop and return parameters plus loss trace.

    Deterministic under (graph, seed): init and the per-epoch corruption
    permutations all derive from train_config.seed.
    """
    enc = init_encoder_params(encoder_config, train_config.seed)
    summary_dim = (encoder_config.edge_dim if train_config.readout_source == "edges"
                   else encoder_config.hidden_dim)
    disc = init_discriminator(encoder_config.edge_dim, summary_dim, train_config.seed)

    params = {**enc.named(), **disc.named()}
    optimizer = Adam(params, lr=train_config.lr)
    trace: list[float] = []

    for epoch in range(train_config.epochs):
        corrupted = corrupt(graph, [train_config.seed, _CORRUPT_TAG, epoch])
        pos, neg, _ = _forward_scores(graph, corrupted, enc, disc,
                                      encoder_config, train_config.readout_source)
        loss = dgi_loss(pos, neg)
        value = float(loss.data)
        if not np.isfinite(value):
            raise RuntimeError(
                f"non-finite loss at epoch {epoch + 1}: {value} "
                f"(pos range [{pos.data.min()}, {pos.data.max()}], "
                f"neg range [{neg.data.min()}, {neg.data.max()}])"
            )
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        trace.append(value)
        if (epoch + 1) % 50 == 0 or epoch == 0:
            logger.debug("epoch %d loss %.6f", epoch + 1, value)

    return TrainResult(encoder_params=enc, discriminator_params=disc,
                       loss_trace=trace, adam_steps=optimizer.step_count)


def score_against_corruption(
    graph: FlowGraph,
    enc: EncoderParams,
    disc: DiscriminatorParams,
    enc_cfg: EncoderConfig,
    readout_source: str = "edges",
    seed: int | list[int] = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Post-training (true, corrupted) edge scores against the true-graph summary."""
    corrupted = corrupt(graph, seed)
    pos, neg, _ = _forward_scores(graph, corrupted, enc, disc, enc_cfg, readout_source)
    return pos.data[:, 0], neg.data[:, 0]
