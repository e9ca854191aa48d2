"""Hierarchical context encoder: CNN with attention pooling per argument, BiGRU over arguments."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import layers
from .argrep import pad_batch
from .diffcore import ParameterStore, Tensor, glorot, ops

log = logging.getLogger(__name__)


@dataclass
class ContextConfig:
    window: int = 5
    filters: int = 100
    attention: int = 100
    doc_hidden: int = 100

    @property
    def out_dim(self) -> int:
        return 2 * self.doc_hidden

    def validate(self) -> None:
        if min(self.window, self.filters, self.attention, self.doc_hidden) < 1:
            raise ValueError("context sizes must be positive")


def init_params(store: ParameterStore, cfg: ContextConfig, word_dim: int,
                rng: np.random.Generator) -> None:
    cfg.validate()
    ws, F, A = cfg.window, cfg.filters, cfg.attention
    store.add("ctx.conv.W", glorot(rng, ws * word_dim, F, shape=(ws, word_dim, F), dtype=store.dtype))
    store.add("ctx.conv.b", np.zeros(F))
    layers.add_linear(store, "ctx.att", F, A, rng)
    store.add("ctx.att.u", glorot(rng, A, 1, shape=(A,), dtype=store.dtype))
    layers.add_bigru(store, "ctx.doc", F, cfg.doc_hidden, rng)


def window_mask(mask: np.ndarray, window: int) -> np.ndarray:
    """Valid convolution positions for right-padded rows (at least one per row)."""
    n_pos = mask.shape[1] - window + 1
    last = np.maximum(mask.sum(axis=1), window) - window  # last valid start index
    return np.arange(n_pos)[None, :] <= last[:, None]


@dataclass
class ArgumentEmbedding:
    a: Tensor            # (N, F)
    features: Tensor     # s, (N, P, F)
    attention: Tensor    # u, (N, P)
    position_mask: np.ndarray


def argument_embed(store: ParameterStore, cfg: ContextConfig, ids: np.ndarray,
                   mask: np.ndarray) -> ArgumentEmbedding:
    """Convolution + attention pooling over padded word ids (N, L), L >= window."""
    if ids.shape[1] < cfg.window:
        pad = cfg.window - ids.shape[1]
        ids = np.pad(ids, ((0, 0), (0, pad)))
        mask = np.pad(mask, ((0, 0), (0, pad)))
    e = ops.embedding(store["emb.W"], ids)
    s = ops.relu(ops.conv1d(e, store["ctx.conv.W"], store["ctx.conv.b"]))
    m = ops.tanh(layers.linear(store, "ctx.att", s))
    pos_mask = window_mask(mask, cfg.window)
    u = ops.softmax(ops.matmul(m, store["ctx.att.u"]), mask=pos_mask)
    a = ops.sum(s * ops.reshape(u, u.data.shape + (1,)), axis=1)
    return ArgumentEmbedding(a, s, u, pos_mask)


def context_encode(store: ParameterStore, cfg: ContextConfig,
                   posts: Sequence[Sequence[Sequence[int]]], dtype=np.float64) -> Tensor:
    """Context vectors (B, 2 * doc_hidden), one per post (a list of id sequences).

    Arguments of all posts go through the CNN together; a post with no
    arguments gets the zero vector.
    """
    flat = [arg for post in posts for arg in post]
    B = len(posts)
    n_max = max([1] + [len(p) for p in posts])
    empty = sum(1 for p in posts if not p)
    if empty:
        log.warning("%d of %d contexts are empty; using zero context vectors", empty, B)
    if not flat:
        return Tensor(np.zeros((B, cfg.out_dim), dtype=dtype))
    ids, mask = pad_batch(flat, min_len=cfg.window)
    arg = argument_embed(store, cfg, ids, mask)
    zero = Tensor(np.zeros((1, cfg.filters), dtype=arg.a.data.dtype))
    table = ops.concat([arg.a, zero], axis=0)
    index = np.full((B, n_max), len(flat), dtype=np.int64)
    doc_mask = np.zeros((B, n_max), dtype=bool)
    k = 0
    for b, post in enumerate(posts):
        index[b, :len(post)] = np.arange(k, k + len(post))
        doc_mask[b, :len(post)] = True
        k += len(post)
    seq = ops.embedding(table, index)
    states = layers.bigru(store, "ctx.doc", seq, doc_mask)
    return layers.masked_mean(states, doc_mask)


def init_flat_params(store: ParameterStore, cfg: ContextConfig, word_dim: int,
                     rng: np.random.Generator) -> None:
    layers.add_bigru(store, "ctxflat", word_dim, cfg.doc_hidden, rng)


def flat_context_encode(store: ParameterStore, cfg: ContextConfig,
                        posts: Sequence[Sequence[Sequence[int]]], dtype=np.float64) -> Tensor:
    """Word-level BiGRU over each post's concatenated arguments, mean pooled."""
    words = [np.concatenate(p) if len(p) else np.zeros(0, dtype=np.int64) for p in posts]
    if not any(len(w) for w in words):
        return Tensor(np.zeros((len(posts), cfg.out_dim), dtype=dtype))
    ids, mask = pad_batch(words)
    x = ops.embedding(store["emb.W"], ids)
    states = layers.bigru(store, "ctxflat", x, mask)
    return layers.masked_mean(states, mask)
