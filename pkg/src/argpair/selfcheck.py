"""Finite-difference check of the whole model on a tiny deterministic configuration."""
from __future__ import annotations

import numpy as np

from .argrep import ArgRepConfig
from .context import ContextConfig
from .corpus.instances import EncodedInstance
from .diffcore import GradReport, grad_check, ops
from .match import MatchConfig
from .model import VARIANTS, Model, ModelConfig

VOCAB = 12
# Keeps exactly-zero gradients below the 1e-8 floor of the relative error.
LOSS_SCALE = 1e-3


def tiny_model(variant: str = "full", seed: int = 1) -> Model:
    """Small model with unit-variance word vectors and nonzero biases.

    Default 0.1-scale embeddings leave some gradients near 1e-9, below what
    central differences resolve; zero biases park rectifiers on their kink.
    """
    cfg = ModelConfig(ArgRepConfig(M=2, K=3, word_dim=3, enc_hidden=2, dec_hidden=4),
                      ContextConfig(window=3, filters=2, attention=3, doc_hidden=2),
                      MatchConfig(hidden1=8, hidden2=6), variant=variant)
    model = Model(cfg, VOCAB, seed=seed)
    rng = np.random.default_rng(seed)
    for name, t in model.store.items():
        if name == "emb.W":
            t.data[...] = rng.normal(size=t.data.shape)
        elif name.endswith(".b"):
            t.data[...] = rng.normal(0.0, 0.1, size=t.data.shape)
    return model


def tiny_batch(n: int = 2, length: int = 3) -> list[EncodedInstance]:
    out = []
    for s in range(n):
        rng = np.random.default_rng(s)

        def seq():
            return rng.integers(4, VOCAB, size=length)

        out.append(EncodedInstance(f"tri-{s}", seq(), [seq() for _ in range(5)], [seq(), seq()],
                                   [[seq()] for _ in range(5)]))
    return out


def check_variant(variant: str, eps: float = 1e-5, samples: int = 20, seed: int = 0,
                  margin: float = 0.5) -> list[GradReport]:
    """Gradient reports for the training objective of one variant (fixed noise seed)."""
    model = tiny_model(variant)
    batch = tiny_batch()

    def build():
        res = model.forward(batch, train=True, seed=4)
        pos = res.scores[:, 0:1]
        loss = ops.mean(ops.sum(ops.relu(res.scores[:, 1:] - pos + margin), axis=1))
        if res.recon is not None:
            loss = loss + res.recon.loss
        if res.kl is not None:
            loss = loss + res.kl
        return loss * LOSS_SCALE

    return grad_check(build, dict(model.store.items()), eps=eps, samples=samples, seed=seed)


def check_all(eps: float = 1e-5, samples: int = 20, seed: int = 0) -> dict[str, list[GradReport]]:
    return {v: check_variant(v, eps, samples, seed) for v in VARIANTS}
