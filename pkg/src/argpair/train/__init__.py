"""Joint training: losses, SGD steps, schedule, early stopping, checkpoints."""
from .checkpoint import load_model, save_model
from .losses import LossBreakdown, hinge_terms, kl_term, ranking_loss
from .loop import (
    EarlyStopping, FitResult, NumericalError, TrainConfig, autoencoder_step, fit, fit_autoencoder,
    joint_step, lr_at, step_seed,
)

__all__ = [
    "EarlyStopping", "FitResult", "LossBreakdown", "NumericalError", "TrainConfig",
    "autoencoder_step", "fit", "fit_autoencoder",
    "hinge_terms", "joint_step", "kl_term", "load_model", "lr_at", "ranking_loss", "save_model",
    "step_seed",
]
