"""Reverse-mode autodiff over the small set of dense ops the training loop needs.

Everything is float64. A :class:`Tensor` wraps an ndarray and records enough
of the forward pass to propagate gradients back to the leaf parameters; the
op set is deliberately minimal (no general autodiff, no broadcasting rules
beyond what the fixed compute graph uses).
"""

from __future__ import annotations

from typing import Callable

import numpy as np


class Tensor:
    """An ndarray plus an accumulated gradient and backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        _parents: tuple["Tensor", ...] = (),
        _backward: Callable[[], None] | None = None,
        name: str = "",
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents = _parents
        self._backward = _backward
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self) -> None:
        """Backpropagate from a scalar result through the recorded graph."""
        if self.data.size != 1:
            raise ValueError(f"backward() requires a scalar, got shape {self.shape}")
        if not self._parents:
            raise RuntimeError("backward() called before any forward pass was recorded")

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward()

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag})"


def _track(*tensors: Tensor) -> bool:
    return any(t.requires_grad or t._parents for t in tensors)


def _result(data, parents, backward, track) -> Tensor:
    if track:
        return Tensor(data, _parents=parents, _backward=backward)
    return Tensor(data)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    out_data = a.data @ b.data
    track = _track(a, b)
    out = _result(out_data, (a, b), None, track)
    if track:
        def backward():
            a._accumulate(out.grad @ b.data.T)
            b._accumulate(a.data.T @ out.grad)
        out._backward = backward
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"add shape mismatch: {a.shape} vs {b.shape}")
    out = _result(a.data + b.data, (a, b), None, _track(a, b))
    if out._parents:
        def backward():
            a._accumulate(out.grad)
            b._accumulate(out.grad)
        out._backward = backward
    return out


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ValueError(f"concat_cols shape mismatch: {a.shape} vs {b.shape}")
    out = _result(np.concatenate([a.data, b.data], axis=1), (a, b), None, _track(a, b))
    if out._parents:
        na = a.shape[1]
        def backward():
            a._accumulate(out.grad[:, :na])
            b._accumulate(out.grad[:, na:])
        out._backward = backward
    return out


def relu(a: Tensor) -> Tensor:
    out = _result(np.maximum(a.data, 0.0), (a,), None, _track(a))
    if out._parents:
        def backward():
            a._accumulate(out.grad * (a.data > 0.0))
        out._backward = backward
    return out


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # Stable in both tails.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a: Tensor) -> Tensor:
    s = _sigmoid(a.data)
    out = _result(s, (a,), None, _track(a))
    if out._parents:
        def backward():
            a._accumulate(out.grad * s * (1.0 - s))
        out._backward = backward
    return out


def row_mean(a: Tensor) -> Tensor:
    """Mean of the rows: [n × d] → [1 × d]."""
    if a.data.ndim != 2 or a.shape[0] == 0:
        raise ValueError(f"row_mean needs a nonempty 2-D input, got shape {a.shape}")
    n = a.shape[0]
    out = _result(a.data.mean(axis=0, keepdims=True), (a,), None, _track(a))
    if out._parents:
        def backward():
            a._accumulate(np.broadcast_to(out.grad / n, a.shape).copy())
        out._backward = backward
    return out


def transpose(a: Tensor) -> Tensor:
    out = _result(a.data.T.copy(), (a,), None, _track(a))
    if out._parents:
        def backward():
            a._accumulate(out.grad.T)
        out._backward = backward
    return out


def gather_rows(a: Tensor, index: np.ndarray) -> Tensor:
    """Select rows by integer index (repeats allowed)."""
    index = np.asarray(index, dtype=np.int64)
    out = _result(a.data[index], (a,), None, _track(a))
    if out._parents:
        def backward():
            g = np.zeros_like(a.data)
            np.add.at(g, index, out.grad)
            a._accumulate(g)
        out._backward = backward
    return out


def segment_mean(a: Tensor, segments: np.ndarray, num_segments: int) -> Tensor:
    """Mean of rows grouped by segment id; empty segments yield zero rows.

    Accumulation runs in ascending row order, so results are bitwise stable
    for a fixed input ordering.
    """
    segments = np.asarray(segments, dtype=np.int64)
    if a.shape[0] != segments.shape[0]:
        raise ValueError("segment_mean: one segment id per row required")
    counts = np.bincount(segments, minlength=num_segments).astype(np.float64)
    sums = np.zeros((num_segments, a.shape[1]), dtype=np.float64)
    np.add.at(sums, segments, a.data)
    denom = np.where(counts > 0, counts, 1.0)[:, None]
    out = _result(sums / denom, (a,), None, _track(a))
    if out._parents:
        def backward():
            a._accumulate(out.grad[segments] / denom[segments])
        out._backward = backward
    return out


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clip values; gradient passes only through unclipped entries."""
    out = _result(np.clip(a.data, lo, hi), (a,), None, _track(a))
    if out._parents:
        mask = (a.data >= lo) & (a.data <= hi)
        def backward():
            a._accumulate(out.grad * mask)
        out._backward = backward
    return out


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0.0):
        raise ValueError("log requires strictly positive input; clamp first")
    out = _result(np.log(a.data), (a,), None, _track(a))
    if out._parents:
        def backward():
            a._accumulate(out.grad / a.data)
        out._backward = backward
    return out


def sum_all(a: Tensor) -> Tensor:
    out = _result(a.data.sum(keepdims=False).reshape(()), (a,), None, _track(a))
    if out._parents:
        def backward():
            a._accumulate(np.broadcast_to(out.grad, a.shape).copy())
        out._backward = backward
    return out


def scale(a: Tensor, c: float) -> Tensor:
    out = _result(a.data * c, (a,), None, _track(a))
    if out._parents:
        def backward():
            a._accumulate(out.grad * c)
        out._backward = backward
    return out


def add_const(a: Tensor, c: float) -> Tensor:
    out = _result(a.data + c, (a,), None, _track(a))
    if out._parents:
        def backward():
            a._accumulate(out.grad)
        out._backward = backward
    return out


def glorot_uniform(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Fan-based uniform init, seeded by the caller's generator."""
    fan_in, fan_out = shape
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)
