"""Discrete variational autoencoder over single arguments.

A BiGRU encodes the argument; its last state feeds M independent K-way
categorical heads. Relaxed Gumbel-Softmax samples initialise a GRU decoder
that reconstructs the argument, while the posteriors themselves give the
discrete representation used for matching.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import layers
from .corpus.vocab import BOS, EOS, PAD, Vocabulary
from .diffcore import ParameterStore, Tensor, glorot, ops

LATENT_LOGIT_GAIN = 3.0

log = logging.getLogger(__name__)

SeedLike = Union[int, np.random.Generator, None]


@dataclass
class ArgRepConfig:
    M: int = 5
    K: int = 5
    word_dim: int = 50
    enc_hidden: int = 200
    dec_hidden: int = 400
    tau: float = 1.0

    @property
    def enc_dim(self) -> int:
        return 2 * self.enc_hidden

    def validate(self) -> None:
        if self.M < 1 or self.K < 2:
            raise ValueError(f"need M >= 1 and K >= 2, got M={self.M} K={self.K}")
        if min(self.word_dim, self.enc_hidden, self.dec_hidden) < 1:
            raise ValueError("layer sizes must be positive")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")


@dataclass
class LatentState:
    logits: Tensor       # (B, M, K)
    posteriors: Tensor   # (B, M, K)
    codes: np.ndarray    # (B, M), categories numbered 1..K
    samples: Optional[Tensor] = None  # relaxed one-hots, (B, M, K)


@dataclass
class EncodedBatch:
    states: Tensor      # (B, T, 2 * enc_hidden)
    final: Tensor       # (B, 2 * enc_hidden), the state at each sequence's last token
    mask: np.ndarray    # (B, T)


def pad_batch(seqs: Sequence[Sequence[int]], min_len: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad id sequences with PAD; returns (ids, mask)."""
    T = max([min_len] + [len(s) for s in seqs])
    ids = np.full((len(seqs), T), PAD, dtype=np.int64)
    mask = np.zeros((len(seqs), T), dtype=bool)
    for i, s in enumerate(seqs):
        ids[i, :len(s)] = s
        mask[i, :len(s)] = True
    return ids, mask


def _rng(seed: SeedLike) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def load_embeddings(path, dim: int = 50) -> dict[str, np.ndarray]:
    """Read a whitespace-separated ``token v1 ... v_dim`` text file."""
    vectors = {}
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip().split(" ")
            if len(parts) != dim + 1:
                if lineno == 1 and len(parts) == 2:
                    continue  # word2vec-style header
                raise ValueError(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
            vectors[parts[0]] = np.asarray(parts[1:], dtype=np.float64)
    return vectors


def init_embeddings(store: ParameterStore, vocab_size: int, dim: int, rng: np.random.Generator,
                    pretrained: Optional[dict[str, np.ndarray]] = None,
                    vocab: Optional[Vocabulary] = None) -> None:
    W = rng.normal(0.0, 0.1, size=(vocab_size, dim))
    if pretrained and vocab is not None:
        hits = 0
        for tok, i in vocab.token_to_id.items():
            vec = pretrained.get(tok)
            if vec is not None:
                W[i] = vec
                hits += 1
        log.info("pretrained embeddings cover %d/%d tokens", hits, vocab_size)
    store.add("emb.W", W)


def init_params(store: ParameterStore, cfg: ArgRepConfig, vocab_size: int,
                rng: np.random.Generator, decoder: bool = True, latents: bool = True) -> None:
    """Encoder, categorical heads, latent embeddings and decoder (embeddings added separately)."""
    cfg.validate()
    E, D, M, K = cfg.enc_dim, cfg.dec_hidden, cfg.M, cfg.K
    layers.add_bigru(store, "enc", cfg.word_dim, cfg.enc_hidden, rng)
    if latents:
        # Encoder states start small, so plain Glorot logits are nearly equal for
        # every argument and the posteriors sit at the uniform saddle. The gain and
        # the unit-scale code embeddings let the decoder see the codes early.
        W = LATENT_LOGIT_GAIN * glorot(rng, E, K, shape=(M, K, E), dtype=store.dtype)
        store.add("latent.W", W)
        store.add("latent.b", np.zeros((M, K)))
        store.add("latent.emb", rng.normal(0.0, 1.0 / np.sqrt(M), size=(M, K, D)))
    if decoder:
        layers.add_gru(store, "dec", cfg.word_dim, D, rng)
        layers.add_linear(store, "dec.out", D, vocab_size, rng)


def encode(store: ParameterStore, ids: np.ndarray, mask: np.ndarray) -> EncodedBatch:
    """BiGRU states for right-padded ``ids`` (B, T)."""
    lengths = mask.sum(axis=1)
    if np.any(lengths < 1):
        raise ValueError("cannot encode an empty sequence")
    x = ops.embedding(store["emb.W"], ids)
    states = layers.bigru(store, "enc", x, mask)
    final = states[np.arange(len(ids)), lengths - 1]
    return EncodedBatch(states, final, mask)


def encode_tokens(store: ParameterStore, tokens: Sequence[int]) -> EncodedBatch:
    if len(tokens) == 0:
        raise ValueError("cannot encode an empty sequence")
    ids, mask = pad_batch([tokens])
    return encode(store, ids, mask)


def latent_logits(store: ParameterStore, final: Tensor) -> Tensor:
    W = store["latent.W"]
    M, K, E = W.data.shape
    flat = ops.matmul(final, ops.transpose(ops.reshape(W, (M * K, E))))
    return ops.reshape(flat, (-1, M, K)) + store["latent.b"]


def latent_posteriors(store: ParameterStore, final: Tensor) -> LatentState:
    logits = latent_logits(store, final)
    post = ops.softmax(logits)
    return LatentState(logits, post, codes_from_logits(logits.data))


def codes_from_logits(logits: np.ndarray) -> np.ndarray:
    """1-based argmax per latent; ties go to the lowest category."""
    return np.argmax(logits, axis=-1) + 1


def gumbel_noise(shape, rng: SeedLike, dtype=np.float64) -> np.ndarray:
    u = _rng(rng).random(shape)
    u = np.where(u > 0.0, u, np.finfo(np.float64).tiny)
    return (-np.log(-np.log(u))).astype(dtype)


def gumbel_relax(logits: Tensor, tau: float, rng: SeedLike) -> Tensor:
    """softmax((logits + g) / tau) with Gumbel noise ``g`` held as a constant leaf."""
    if tau <= 0:
        raise ValueError(f"temperature must be > 0, got {tau}")
    if not isinstance(logits, Tensor):
        logits = Tensor(logits)
    g = Tensor(gumbel_noise(logits.shape, rng, logits.data.dtype))
    return ops.softmax((logits + g) * (1.0 / tau))


def latent_mixture(store: ParameterStore, weights: Tensor) -> Tensor:
    """sum_i weights_i @ W_e[i] for (B, M, K) simplex weights; (B, D)."""
    W = store["latent.emb"]
    M, K, D = W.data.shape
    return ops.matmul(ops.reshape(weights, (-1, M * K)), ops.reshape(W, (M * K, D)))


def decoder_init(store: ParameterStore, samples: Tensor) -> Tensor:
    return latent_mixture(store, samples)


def discrete_representation(store: ParameterStore, posteriors: Tensor) -> Tensor:
    return latent_mixture(store, posteriors)


@dataclass
class Reconstruction:
    per_sequence: Tensor   # (B,) mean cross-entropy over each target
    correct: int           # teacher-forced argmax hits
    total: int

    @property
    def loss(self) -> Tensor:
        return ops.mean(self.per_sequence)

    @property
    def accuracy(self) -> float:
        return self.correct / max(self.total, 1)


def decoder_targets(ids: np.ndarray, mask: np.ndarray):
    """Teacher-forcing inputs ``[BOS, w1..wT]`` and targets ``[w1..wT, EOS]``."""
    B, T = ids.shape
    lengths = mask.sum(axis=1)
    inp = np.full((B, T + 1), PAD, dtype=np.int64)
    tgt = np.full((B, T + 1), PAD, dtype=np.int64)
    tmask = np.zeros((B, T + 1), dtype=bool)
    inp[:, 0] = BOS
    for b in range(B):
        n = lengths[b]
        inp[b, 1:n + 1] = ids[b, :n]
        tgt[b, :n] = ids[b, :n]
        tgt[b, n] = EOS
        tmask[b, :n + 1] = True
    return inp, tgt, tmask


def reconstruction_loss(store: ParameterStore, ids: np.ndarray, mask: np.ndarray,
                        h0: Tensor) -> Reconstruction:
    inp, tgt, tmask = decoder_targets(ids, mask)
    x = ops.embedding(store["emb.W"], inp)
    states = ops.stack(layers.gru_scan(store, "dec", x, tmask, h0=h0), axis=1)
    logp = ops.log_softmax(layers.linear(store, "dec.out", states))
    onehot = np.zeros(logp.data.shape, dtype=logp.data.dtype)
    np.put_along_axis(onehot, tgt[..., None], 1.0, axis=-1)
    weights = onehot * (tmask / tmask.sum(axis=1, keepdims=True))[..., None]
    per_seq = ops.sum(ops.reshape(logp * weights, (len(ids), -1)), axis=1) * -1.0
    pred = logp.data.argmax(axis=-1)
    correct = int(((pred == tgt) & tmask).sum())
    return Reconstruction(per_seq, correct, int(tmask.sum()))
