"""SGD with momentum and Adam with decoupled weight decay.

Both optimizers scan every gradient for non-finite entries before touching
any parameter; a NaN aborts the whole step with NumericFaultError so model
state never absorbs a poisoned update.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import NumericFaultError
from .tensor import Tensor


class _Optimizer:
    def __init__(self, params: Sequence[Tensor], learning_rate: float,
                 weight_decay: float):
        if learning_rate <= 0.0:
            raise ValueError("learning rate must be positive")
        if weight_decay < 0.0:
            raise ValueError("weight decay must be non-negative")
        self.params = list(params)
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.step_count = 0

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def _gradients(self) -> list[np.ndarray]:
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data)
                 for p in self.params]
        for g in grads:
            if not np.isfinite(g).all():
                raise NumericFaultError("non-finite gradient; step aborted")
        return grads


class SgdMomentum(_Optimizer):
    """v <- m*v + g + wd*theta; theta <- theta - lr*v."""

    def __init__(self, params: Sequence[Tensor], learning_rate: float,
                 momentum: float = 0.9, weight_decay: float = 0.0):
        super().__init__(params, learning_rate, weight_decay)
        self.kind = "sgd-momentum"
        self.momentum = momentum
        self.velocities = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        grads = self._gradients()
        for p, v, g in zip(self.params, self.velocities, grads):
            v *= self.momentum
            v += g
            if self.weight_decay:
                v += self.weight_decay * p.data
            p.data -= self.learning_rate * v
        self.step_count += 1


class Adam(_Optimizer):
    """Bias-corrected Adam; weight decay is decoupled (theta <- theta - lr*wd*theta
    before the adaptive update)."""

    def __init__(self, params: Sequence[Tensor], learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 weight_decay: float = 0.0):
        super().__init__(params, learning_rate, weight_decay)
        self.kind = "adam"
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.first_moments = [np.zeros_like(p.data) for p in self.params]
        self.second_moments = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        grads = self._gradients()
        self.step_count += 1
        t = self.step_count
        correction1 = 1.0 - self.beta1 ** t
        correction2 = 1.0 - self.beta2 ** t
        for p, m, v, g in zip(self.params, self.first_moments,
                              self.second_moments, grads):
            if self.weight_decay:
                p.data -= self.learning_rate * self.weight_decay * p.data
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / correction1
            v_hat = v / correction2
            p.data -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
