"""Softmax cross-entropy and two-point KL divergence.

Cross-entropy comes in two forms: a plain-array version returning the loss
and its logit gradient in closed form (softmax minus one-hot), and a fused
autodiff op over batches that supports per-instance weights.
"""
from __future__ import annotations

import numpy as np

from ..errors import InvalidDistributionError, InvalidLabelError
from .tensor import Tensor

KL_FLOOR = 1e-12


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax along the last axis."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Loss -log softmax(logits)[label] and its gradient w.r.t. the logits."""
    logits = np.asarray(logits, dtype=np.float64)
    n_classes = logits.shape[-1]
    if not 0 <= label < n_classes:
        raise InvalidLabelError(f"label {label} outside [0, {n_classes})")
    shifted = logits - logits.max()
    log_z = np.log(np.exp(shifted).sum())
    loss = float(log_z - shifted[label])
    grad = softmax(logits)
    grad[label] -= 1.0
    return loss, grad


def cross_entropy_batch(logits: Tensor, labels: np.ndarray,
                        weights: np.ndarray | None = None) -> Tensor:
    """Weighted sum of per-row softmax cross-entropies as a scalar graph node.

    With `weights=None` every row weighs 1 (plain sum). The backward pass is
    the closed form weights * (softmax - one_hot).
    """
    labels = np.asarray(labels)
    batch, n_classes = logits.data.shape
    if labels.shape != (batch,):
        raise InvalidLabelError(f"labels shape {labels.shape} != ({batch},)")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise InvalidLabelError("label outside [0, C)")
    w = np.ones(batch) if weights is None else np.asarray(weights, dtype=np.float64)

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    per_row = log_z - shifted[np.arange(batch), labels]
    out = Tensor(np.float64(per_row @ w))

    if logits.requires_grad:
        out.requires_grad = True
        out._parents = (logits,)

        def run():
            probs = softmax(logits.data)
            probs[np.arange(batch), labels] -= 1.0
            logits._accumulate(out.grad * probs * w[:, None])

        out._backward = run
    return out


def _check_distribution(p: np.ndarray, name: str) -> None:
    if p.shape != (2,):
        raise InvalidDistributionError(f"{name} must be a probability pair, got shape {p.shape}")
    if p.min() < 0.0 or p.max() > 1.0:
        raise InvalidDistributionError(f"{name} entries outside [0, 1]: {p}")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InvalidDistributionError(f"{name} does not sum to 1: {p}")


def kl_divergence(p, q) -> float:
    """KL(p || q) over probability pairs, with 0 log(0/.) := 0 and q floored at 1e-12."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    _check_distribution(p, "p")
    _check_distribution(q, "q")
    q_safe = np.maximum(q, KL_FLOOR)
    terms = np.where(p > 0.0, p * (np.log(np.maximum(p, KL_FLOOR)) - np.log(q_safe)), 0.0)
    return float(terms.sum())
