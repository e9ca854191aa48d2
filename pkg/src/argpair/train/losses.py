from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..diffcore import Tensor, ops
from ..model import batch_kl


def kl_term(posteriors) -> float:
    """KL(batch-mean posterior || uniform) averaged over latents.

    Accepts an (N, M, K) array or a sequence of per-argument (M, K) posteriors.
    """
    arr = np.asarray(posteriors, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.shape[0] == 0:
        raise ValueError("empty batch")
    return float(batch_kl(Tensor(arr)).data)


def hinge_terms(scores: Tensor, margin: float) -> Tensor:
    """max(0, margin - S+ + S-) per negative; ``scores`` (B, 1 + u), positive in column 0."""
    pos = scores[:, 0:1]
    # (S- + margin) - S+ is exactly zero iff S+ == S- + margin in floating point,
    # so the loss vanishes exactly when every margin holds
    return ops.relu((scores[:, 1:] + margin) - pos)


def ranking_loss(positive: float, negatives: Sequence[float], margin: float) -> float:
    scores = Tensor(np.asarray([[positive, *negatives]], dtype=np.float64))
    return float(ops.sum(hinge_terms(scores, margin)).data)


@dataclass
class LossBreakdown:
    reconstruction: float
    kl: float
    dvae: float
    matching: float
    total: float
    lam: float = 1.0

    def as_dict(self) -> dict:
        return {"reconstruction": self.reconstruction, "kl": self.kl, "dvae": self.dvae,
                "matching": self.matching, "total": self.total}
