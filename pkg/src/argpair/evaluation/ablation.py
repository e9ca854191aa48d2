from __future__ import annotations

import copy
from typing import Optional

from ..model import VARIANTS, ModelConfig

ABLATIONS = tuple(VARIANTS)


def ablate(name: str, base: Optional[ModelConfig] = None) -> ModelConfig:
    """Copy of ``base`` (default hyperparameters if omitted) wired as variant ``name``."""
    if name not in VARIANTS:
        raise ValueError(f"unknown ablation {name!r}; valid names: {', '.join(ABLATIONS)}")
    cfg = copy.deepcopy(base) if base is not None else ModelConfig()
    cfg.variant = name
    return cfg
