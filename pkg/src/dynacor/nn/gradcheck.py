"""Central finite-difference verification of analytic gradients.

The checker perturbs every parameter entry by h = 1e-4 in both directions,
so it is meant for small probe models, not production nets.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor

DEFAULT_STEP = 1e-4


@dataclass
class GradCheckResult:
    passed: bool
    max_rel_error: float


def grad_check(loss_fn: Callable[[], Tensor], params: Sequence[Tensor],
               tolerance: float = 1e-4, step: float = DEFAULT_STEP) -> GradCheckResult:
    """Compare analytic gradients of `loss_fn` against central differences.

    `loss_fn` must rebuild the computation graph on every call (it is invoked
    2 * n_params + 1 times). The relative error for one entry is
    |analytic - numeric| / max(1, |analytic|, |numeric|).
    """
    for p in params:
        p.zero_grad()
    loss = loss_fn()
    loss.backward()
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data)
                for p in params]

    worst = 0.0
    for p, grad in zip(params, analytic):
        flat = p.data.reshape(-1)
        flat_grad = grad.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + step
            up = float(loss_fn().data)
            flat[i] = saved - step
            down = float(loss_fn().data)
            flat[i] = saved
            numeric = (up - down) / (2.0 * step)
            denom = max(1.0, abs(flat_grad[i]), abs(numeric))
            worst = max(worst, abs(float(flat_grad[i]) - numeric) / denom)
    return GradCheckResult(passed=bool(worst < tolerance), max_rel_error=float(worst))
