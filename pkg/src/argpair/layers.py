"""Recurrent and dense building blocks shared by the model components.

Weights use the row-vector convention ``y = x @ W + b`` with ``W`` of shape
(in, out).
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .diffcore import ParameterStore, Tensor, glorot, ops


def add_linear(store: ParameterStore, name: str, n_in: int, n_out: int,
               rng: np.random.Generator) -> None:
    store.add(f"{name}.W", glorot(rng, n_in, n_out, dtype=store.dtype))
    store.add(f"{name}.b", np.zeros(n_out))


def linear(store: ParameterStore, name: str, x: Tensor) -> Tensor:
    return ops.matmul(x, store[f"{name}.W"]) + store[f"{name}.b"]


def add_gru(store: ParameterStore, name: str, n_in: int, hidden: int,
            rng: np.random.Generator) -> None:
    """Gate order in the fused matrices is (update, reset, candidate)."""
    store.add(f"{name}.Wx", np.concatenate(
        [glorot(rng, n_in, hidden, dtype=store.dtype) for _ in range(3)], axis=1))
    store.add(f"{name}.Wh", np.concatenate(
        [glorot(rng, hidden, hidden, dtype=store.dtype) for _ in range(3)], axis=1))
    store.add(f"{name}.b", np.zeros(3 * hidden))


def gru_hidden_size(store: ParameterStore, name: str) -> int:
    return store[f"{name}.Wh"].data.shape[0]


def gru_step(store: ParameterStore, name: str, x_proj: Tensor, h: Tensor,
             recurrent: Optional[tuple[Tensor, Tensor]] = None) -> Tensor:
    """One GRU update from a pre-projected input ``x_proj = x @ Wx + b``.

    z = sigmoid(.), r = sigmoid(.), n = tanh(x_n + U_n (r * h)), h' = (1 - z) * n + z * h
    """
    H = gru_hidden_size(store, name)
    Wzr, Wn = recurrent if recurrent is not None else split_recurrent(store, name)
    hz_r = ops.matmul(h, Wzr)
    z = ops.sigmoid(x_proj[..., :H] + hz_r[..., :H])
    r = ops.sigmoid(x_proj[..., H:2 * H] + hz_r[..., H:])
    n = ops.tanh(x_proj[..., 2 * H:] + ops.matmul(r * h, Wn))
    return n + z * (h - n)


def split_recurrent(store: ParameterStore, name: str) -> tuple[Tensor, Tensor]:
    H = gru_hidden_size(store, name)
    Wh = store[f"{name}.Wh"]
    return Wh[:, : 2 * H], Wh[:, 2 * H:]


def gru_scan(store: ParameterStore, name: str, x: Tensor, mask: np.ndarray,
             h0: Optional[Tensor] = None, reverse: bool = False) -> list[Tensor]:
    """Run a GRU over ``x`` (B, T, in) and return the T states (each (B, H)).

    ``mask`` (B, T) marks real positions; at padded positions the state is
    carried through unchanged. Sequences are right-padded, so in reverse mode
    the state stays at ``h0`` until the last real token is reached.
    """
    B, T = mask.shape
    H = gru_hidden_size(store, name)
    if h0 is None:
        h0 = Tensor(np.zeros((B, H), dtype=store.dtype))
    xp = ops.matmul(x, store[f"{name}.Wx"]) + store[f"{name}.b"]
    steps = range(T - 1, -1, -1) if reverse else range(T)
    states: list[Optional[Tensor]] = [None] * T
    h = h0
    full = bool(mask.all())
    rec = split_recurrent(store, name)
    for t in steps:
        h_new = gru_step(store, name, xp[:, t], h, rec)
        if full:
            h = h_new
        else:
            m = mask[:, t:t + 1]
            h = ops.where(m, h_new, h)
        states[t] = h
    return states


def bigru(store: ParameterStore, name: str, x: Tensor, mask: np.ndarray) -> Tensor:
    """Bidirectional GRU; returns (B, T, 2H) with forward then backward halves."""
    fw = gru_scan(store, f"{name}.fw", x, mask)
    bw = gru_scan(store, f"{name}.bw", x, mask, reverse=True)
    return ops.stack([ops.concat([f, b], axis=-1) for f, b in zip(fw, bw)], axis=1)


def add_bigru(store: ParameterStore, name: str, n_in: int, hidden: int,
              rng: np.random.Generator) -> None:
    add_gru(store, f"{name}.fw", n_in, hidden, rng)
    add_gru(store, f"{name}.bw", n_in, hidden, rng)


def masked_mean(x: Tensor, mask: np.ndarray) -> Tensor:
    """Mean over axis 1 of (B, T, D) counting only ``mask`` positions; all-masked rows give 0."""
    m = mask.astype(x.data.dtype if x.data is not None else np.float64)
    counts = np.maximum(m.sum(axis=1, keepdims=True), 1.0)
    weights = (m / counts)[..., None]
    return ops.sum(x * weights, axis=1)


def dropout(x: Tensor, p: float, rng: Optional[np.random.Generator]) -> Tensor:
    """Inverted dropout; identity when ``rng`` is None (evaluation) or ``p`` is 0."""
    if rng is None or p <= 0.0:
        return x
    keep = (rng.random(x.shape) >= p).astype(x.data.dtype) / (1.0 - p)
    return x * keep
