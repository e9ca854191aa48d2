"""Matching features, the scoring network and candidate ranking."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import layers
from .diffcore import ParameterStore, ShapeError, Tensor, ops


@dataclass
class MatchConfig:
    hidden1: int = 512
    hidden2: int = 128
    dropout: float = 0.5

    def validate(self) -> None:
        if self.hidden1 < 1 or self.hidden2 < 1:
            raise ValueError("hidden sizes must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


def init_params(store: ParameterStore, cfg: MatchConfig, input_dim: int,
                rng: np.random.Generator) -> None:
    cfg.validate()
    layers.add_linear(store, "match.H1", input_dim, cfg.hidden1, rng)
    layers.add_linear(store, "match.H2", cfg.hidden1, cfg.hidden2, rng)
    layers.add_linear(store, "score.S", cfg.hidden2, 1, rng)


def quotation_guided_attention(rq: Tensor, states: Tensor,
                               mask: Optional[np.ndarray] = None) -> tuple[Tensor, Tensor]:
    """Attention of the quotation vector over reply token states.

    ``rq``: (B, D); ``states``: (B, T, D). Returns v (B, T) and f_r (B, D).
    """
    if rq.shape[-1] != states.shape[-1]:
        raise ShapeError("quotation_guided_attention", [rq.shape, states.shape],
                         "representation and state sizes differ")
    B, D = rq.shape
    scores = ops.dot(states, ops.reshape(rq, (B, 1, D)))
    v = ops.softmax(scores, mask=mask)
    f_r = ops.sum(states * ops.reshape(v, v.shape + (1,)), axis=1)
    return v, f_r


@dataclass
class MatchFeatures:
    f_p: Tensor
    f_d: Tensor
    f_r: Tensor
    v: Tensor

    @property
    def f_m(self) -> Tensor:
        return ops.concat([self.f_p, self.f_d, self.f_r], axis=-1)


def match_features(rq: Tensor, rr: Tensor, states: Tensor,
                   mask: Optional[np.ndarray] = None) -> MatchFeatures:
    v, f_r = quotation_guided_attention(rq, states, mask)
    return MatchFeatures(rq * rr, rq - rr, f_r, v)


def score(store: ParameterStore, blocks: Sequence[Tensor], dropout: float = 0.0,
          rng: Optional[np.random.Generator] = None) -> Tensor:
    """S = W_S H + b_S with H from two rectified layers over the joined blocks; (B,)."""
    x = ops.concat(list(blocks), axis=-1)
    x = layers.dropout(x, dropout, rng)
    h = ops.relu(layers.linear(store, "match.H1", x))
    h = layers.dropout(h, dropout, rng)
    h = ops.relu(layers.linear(store, "match.H2", h))
    s = layers.linear(store, "score.S", h)
    return ops.reshape(s, (s.shape[0],))


@dataclass
class RankedCandidates:
    instance_id: str
    scores: list[float]
    positive_index: int = 0
    order: list[int] = field(init=False)
    rank: int = field(init=False)
    ties: int = field(init=False)

    def __post_init__(self):
        self.order = sorted(range(len(self.scores)), key=lambda i: (-self.scores[i], i))
        self.rank = self.order.index(self.positive_index) + 1
        pos = self.scores[self.positive_index]
        self.ties = sum(1 for i, s in enumerate(self.scores) if i != self.positive_index and s == pos)


def rank_scores(instance_id: str, scores: Sequence[float], positive_index: int = 0) -> RankedCandidates:
    """Descending stable order; equal scores keep candidate order."""
    return RankedCandidates(instance_id, [float(s) for s in scores], positive_index)
