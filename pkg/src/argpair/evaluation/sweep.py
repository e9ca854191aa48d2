"""Train one model per value of M or K."""
from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Sequence

from ..corpus.instances import EncodedInstance
from ..model import Model, ModelConfig

SWEEP_VALUES = (1, 3, 5, 7, 9)


@dataclass
class SweepRow:
    axis: str
    value: int
    p_at_1: float
    mrr: float
    best_epoch: int


def sweep(axis: str, values: Sequence[int], base: ModelConfig, train_config,
          train: Sequence[EncodedInstance], dev: Sequence[EncodedInstance], vocab_size: int,
          eval_set: Sequence[EncodedInstance] | None = None,
          dtype="float64") -> list[SweepRow]:
    """One fit per value with the other hyperparameters fixed at ``base``.

    Rows report the best dev-selected model on ``eval_set`` (dev when omitted).
    """
    from ..train import fit
    from .metrics import metrics

    if axis not in ("M", "K"):
        raise ValueError(f"axis must be 'M' or 'K', got {axis!r}")
    rows = []
    for value in sorted(values):
        cfg = copy.deepcopy(base)
        setattr(cfg.argrep, axis, int(value))
        model = Model(cfg, vocab_size, seed=train_config.seed, dtype=dtype)
        result = fit(model, train, dev, train_config)
        report = metrics(model.rank(eval_set if eval_set is not None else dev))
        rows.append(SweepRow(axis, int(value), report.p_at_1, report.mrr, result.best_epoch))
    return rows

