import numpy as np
import pytest

from argpair import selfcheck
from argpair.argrep import ArgRepConfig
from argpair.context import ContextConfig
from argpair.corpus.instances import EncodedInstance
from argpair.match import MatchConfig
from argpair.model import Model, ModelConfig

TOY_VOCAB = 12


def tiny_config(variant="full", **kw) -> ModelConfig:
    return ModelConfig(
        ArgRepConfig(M=2, K=3, word_dim=3, enc_hidden=2, dec_hidden=4),
        ContextConfig(window=3, filters=2, attention=3, doc_hidden=2),
        MatchConfig(hidden1=8, hidden2=6),
        variant=variant, **kw)


def toy_instance(seed=0, name=None) -> EncodedInstance:
    rng = np.random.default_rng(seed)

    def seq(lo=3, hi=6):
        return rng.integers(4, TOY_VOCAB, size=int(rng.integers(lo, hi)))

    return EncodedInstance(
        id=name or f"toy-{seed}",
        quotation=seq(),
        candidates=[seq() for _ in range(5)],
        quotation_context=[seq(), seq()],
        reply_contexts=[[seq()] for _ in range(5)],
    )


@pytest.fixture
def tiny_model():
    return Model(tiny_config(), TOY_VOCAB, seed=0)


@pytest.fixture
def toy_batch():
    return [toy_instance(s) for s in range(3)]


def gradcheck_model(variant="full", seed=1) -> Model:
    model = selfcheck.tiny_model(variant, seed)
    assert model.config == tiny_config(variant)
    return model


def three_token_instance(seed=0) -> EncodedInstance:
    rng = np.random.default_rng(seed)

    def seq():
        return rng.integers(4, TOY_VOCAB, size=3)

    return EncodedInstance(f"tri-{seed}", seq(), [seq() for _ in range(5)], [seq(), seq()],
                           [[seq()] for _ in range(5)])
