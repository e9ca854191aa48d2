"""Central finite-difference gradient checking."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .tensor import Tensor, backward, forward


@dataclass
class GradReport:
    parameter: str
    max_relative_error: float
    analytic: list[float] = field(default_factory=list)
    numeric: list[float] = field(default_factory=list)

    def passed(self, tol: float = 1e-4) -> bool:
        return self.max_relative_error < tol


def relative_error(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1e-8)


def grad_check(build: Callable[[], Tensor], params: Mapping[str, Tensor], eps: float = 1e-5,
               samples: int = 20, seed: int = 0) -> list[GradReport]:
    """Compare backward gradients of ``build()`` against central differences.

    ``build`` must construct the scalar loss from the leaves in ``params``
    deterministically. After the analytic pass the graph is re-evaluated with
    :func:`forward` for each perturbed coordinate.
    """
    if not 1e-6 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-6, 1e-3], got {eps}")
    for name, t in params.items():
        if t.data.dtype != np.float64:
            raise ValueError(f"grad_check needs float64 leaves; {name} is {t.data.dtype}")
        if not t.requires_grad:
            raise ValueError(f"{name} does not require gradients")
    for t in params.values():
        t.grad = None
    root = build()
    if not np.all(np.isfinite(root.data)):
        raise FloatingPointError("loss is not finite")
    backward(root)
    rng = np.random.default_rng(seed)
    reports = []
    for name, t in params.items():
        grad = np.zeros_like(t.data) if t.grad is None else t.grad
        flat = t.data.reshape(-1)
        k = min(samples, flat.size)
        coords = rng.choice(flat.size, size=k, replace=False)
        rep = GradReport(name, 0.0)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            fp = float(forward(root).reshape(-1)[0])
            flat[c] = orig - eps
            fm = float(forward(root).reshape(-1)[0])
            flat[c] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise FloatingPointError(f"loss not finite while perturbing {name}[{c}]")
            num = (fp - fm) / (2 * eps)
            ana = float(grad.reshape(-1)[c])
            rep.analytic.append(ana)
            rep.numeric.append(num)
            rep.max_relative_error = max(rep.max_relative_error, relative_error(ana, num))
        reports.append(rep)
    forward(root)
    return reports
