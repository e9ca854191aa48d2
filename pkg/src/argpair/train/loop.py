"""Joint optimisation of the autoencoder and matching objectives."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..corpus.instances import EncodedInstance
from ..diffcore import backward, ops
from ..evaluation.metrics import MetricReport, metrics
from ..model import Model
from .losses import LossBreakdown, hinge_terms

log = logging.getLogger(__name__)


class NumericalError(FloatingPointError):
    """The loss became NaN or infinite."""


@dataclass
class TrainConfig:
    lam: float = 1.0
    margin: float = 10.0
    negatives: int = 4
    batch_size: int = 32
    lr: float = 0.1
    decay: float = 0.05
    epochs: int = 200
    patience: int = 10
    seed: int = 0
    clip: Optional[float] = 5.0
    target_dev_p1: Optional[float] = None   # stop as soon as dev P@1 reaches this

    def validate(self) -> None:
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.margin <= 0:
            raise ValueError("margin must be > 0")
        if self.negatives < 1 or self.batch_size < 1 or self.epochs < 0 or self.patience < 1:
            raise ValueError("negatives, batch_size and patience must be >= 1, epochs >= 0")
        if self.lr <= 0 or self.decay < 0:
            raise ValueError("lr must be > 0 and decay >= 0")
        if self.clip is not None and self.clip <= 0:
            raise ValueError("clip must be > 0 when set")


def lr_at(epoch: int, config: TrainConfig) -> float:
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return config.lr / (1.0 + config.decay * epoch)


def step_seed(seed: int, epoch: int, step: int) -> int:
    return int(np.random.SeedSequence([seed, epoch, step]).generate_state(1)[0])


def _non_finite_instance(res, batch) -> str:
    if res.recon is not None:
        per = res.recon.per_sequence.data.reshape(len(batch), -1)
        bad = ~np.isfinite(per).all(axis=1)
        if bad.any():
            return batch[int(np.argmax(bad))].id
    if res.scores is not None:
        bad = ~np.isfinite(res.scores.data).all(axis=1)
        if bad.any():
            return batch[int(np.argmax(bad))].id
    return batch[0].id if len(batch) == 1 else "<batch-level term>"


def joint_step(model: Model, batch: Sequence[EncodedInstance], config: TrainConfig, lr: float,
               seed: int = 0, matching: bool = True) -> LossBreakdown:
    """One SGD update on ``L = reconstruction + KL + lam * hinge``, averaged per instance.

    ``matching=False`` drops the ranking term entirely (pure autoencoder step).
    """
    if not batch:
        raise ValueError("empty batch")
    store = model.store
    store.zero_grad()
    res = model.forward(batch, train=True, seed=seed, score=matching)
    zero = 0.0
    terms = []
    recon_v = kl_v = lm_v = zero
    if res.recon is not None:
        recon = res.recon.loss
        terms.append(recon)
        recon_v = float(recon.data)
    if res.kl is not None:
        terms.append(res.kl)
        kl_v = float(res.kl.data)
    if matching:
        lm = ops.mean(ops.sum(hinge_terms(res.scores, config.margin), axis=1))
        lm_v = float(lm.data)
        terms.append(lm * config.lam)
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    total_v = float(total.data)
    if not math.isfinite(total_v):
        raise NumericalError(f"non-finite loss {total_v} (instance {_non_finite_instance(res, batch)})")
    _sgd_update(store, total, config, lr)
    return LossBreakdown(recon_v, kl_v, recon_v + kl_v, lm_v, total_v, config.lam)


def _sgd_update(store, total, config: TrainConfig, lr: float) -> None:
    backward(total)
    params = [t for _, t in store.items() if t.grad is not None]
    if config.clip is not None:
        sq = 0.0
        for t in params:
            sq += float(np.sum(t.grad * t.grad))
        norm = math.sqrt(sq)
        scale = config.clip / norm if norm > config.clip else 1.0
    else:
        scale = 1.0
    for t in params:
        t.data -= (lr * scale) * t.grad


def autoencoder_step(model: Model, seqs: Sequence[np.ndarray], config: TrainConfig, lr: float,
                     seed: int = 0) -> LossBreakdown:
    """One SGD update on reconstruction + KL over bare argument sequences."""
    if not seqs:
        raise ValueError("empty batch")
    model.store.zero_grad()
    recon, kl, _ = model.autoencode(seqs, train=True, seed=seed)
    total = recon.loss + kl
    total_v = float(total.data)
    if not math.isfinite(total_v):
        raise NumericalError(f"non-finite autoencoder loss {total_v}")
    _sgd_update(model.store, total, config, lr)
    r, k = float(recon.loss.data), float(kl.data)
    return LossBreakdown(r, k, r + k, 0.0, total_v, config.lam)


def fit_autoencoder(model: Model, seqs: Sequence[np.ndarray], config: TrainConfig,
                    target_accuracy: Optional[float] = None,
                    on_epoch: Optional[Callable[[dict], None]] = None) -> list[dict]:
    """Train the autoencoder alone; per epoch, log teacher-forced token accuracy.

    Accuracy is measured in evaluation mode, with the posteriors (not Gumbel
    samples) feeding the decoder.
    """
    config.validate()
    history = []
    for epoch in range(config.epochs):
        lr = lr_at(epoch, config)
        order = np.random.default_rng([config.seed, epoch]).permutation(len(seqs))
        losses = []
        for step, start in enumerate(range(0, len(seqs), config.batch_size)):
            batch = [seqs[i] for i in order[start:start + config.batch_size]]
            losses.append(autoencoder_step(model, batch, config, lr,
                                           step_seed(config.seed, epoch, step)).total)
        recon, _, _ = model.autoencode(seqs, train=False)
        row = {"epoch": epoch, "lr": lr, "loss": float(np.mean(losses)),
               "accuracy": recon.accuracy}
        history.append(row)
        if on_epoch is not None:
            on_epoch(row)
        if target_accuracy is not None and recon.accuracy >= target_accuracy:
            break
    return history


class EarlyStopping:
    """Track the best dev score; stop after ``patience`` epochs without strict improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = -math.inf
        self.best_epoch = -1
        self.bad_epochs = 0

    def update(self, epoch: int, score: float) -> bool:
        if score > self.best:
            self.best, self.best_epoch, self.bad_epochs = score, epoch, 0
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad_epochs >= self.patience


@dataclass
class FitResult:
    best_state: dict
    best_epoch: int
    best_dev: MetricReport
    history: list[dict] = field(default_factory=list)
    stopped_early: bool = False


def fit(model: Model, train: Sequence[EncodedInstance], dev: Sequence[EncodedInstance],
        config: TrainConfig, on_epoch: Optional[Callable[[dict], None]] = None) -> FitResult:
    """Epoch loop with per-epoch dev P@1 model selection.

    The model is left holding the best snapshot's parameters.
    """
    config.validate()
    if not dev:
        raise ValueError("dev set must be non-empty")
    stopper = EarlyStopping(config.patience)
    best_state, best_report = model.store.state(), None
    history = []
    stopped = False
    for epoch in range(config.epochs):
        lr = lr_at(epoch, config)
        order = np.random.default_rng([config.seed, epoch]).permutation(len(train))
        sums = {"reconstruction": 0.0, "kl": 0.0, "dvae": 0.0, "matching": 0.0, "total": 0.0}
        n_steps = 0
        for step, start in enumerate(range(0, len(train), config.batch_size)):
            batch = [train[i] for i in order[start:start + config.batch_size]]
            bd = joint_step(model, batch, config, lr, step_seed(config.seed, epoch, step))
            for k, v in bd.as_dict().items():
                sums[k] += v
            n_steps += 1
        report = metrics(model.rank(dev))
        row = {"epoch": epoch, "lr": lr, **{k: v / max(n_steps, 1) for k, v in sums.items()},
               "dev_p1": report.p_at_1, "dev_mrr": report.mrr, "dev_ties": report.ties}
        history.append(row)
        log.info("epoch %d lr %.4f loss %.4f dev P@1 %.4f MRR %.4f", epoch, lr, row["total"],
                 report.p_at_1, report.mrr)
        if on_epoch is not None:
            on_epoch(row)
        if stopper.update(epoch, report.p_at_1):
            best_state, best_report = model.store.state(), report
        if config.target_dev_p1 is not None and report.p_at_1 >= config.target_dev_p1:
            break
        if stopper.should_stop:
            stopped = True
            break
    if best_report is None:
        best_report = metrics(model.rank(dev))
    model.store.load_state(best_state)
    return FitResult(best_state, stopper.best_epoch, best_report, history, stopped)


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)
