"""Training-signal baselines: a 1-D Gaussian mixture on epoch-averaged
signals, and summed logit differences split by the same mixture.

Both consume unquantized logit-difference trajectories and flag the
lower-mean mixture component: a low logit margin means the model never fit
the given label, the classic mark of a wrong label.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDataError, InvalidSignalError
from .trainer import DynamicsMatrix, summarize

VARIANCE_FLOOR = 1e-9


@dataclass
class Gmm1dParams:
    """Two-component 1-D Gaussian mixture with per-point responsibilities."""

    means: np.ndarray          # (2,)
    variances: np.ndarray      # (2,) floored at 1e-9
    weights: np.ndarray        # (2,) summing to 1
    responsibilities: np.ndarray  # (n, 2)
    log_likelihood: float
    log_likelihoods: list[float] = field(default_factory=list)


def _log_density(values: np.ndarray, means: np.ndarray, variances: np.ndarray,
                 weights: np.ndarray) -> np.ndarray:
    """(n, 2) of log(weight_k * N(x | mean_k, var_k))."""
    diff = values[:, None] - means[None, :]
    return (np.log(weights)[None, :]
            - 0.5 * np.log(2.0 * np.pi * variances)[None, :]
            - diff * diff / (2.0 * variances)[None, :])


def gmm1d_em(values: np.ndarray, iterations: int = 200, tolerance: float = 1e-8,
             seed: int = 0) -> Gmm1dParams:
    """Expectation-maximization for a two-component 1-D Gaussian mixture.

    Means start at the 25th/75th percentiles with pooled variance; iteration
    stops once the log-likelihood improves by less than `tolerance`. The
    percentile initialization makes the fit deterministic, so `seed` is
    accepted only for interface stability.
    """
    del seed
    values = np.asarray(values, dtype=np.float64)
    if np.unique(values).size < 2:
        raise DegenerateDataError("mixture fit needs at least two distinct values")
    n = len(values)

    means = np.percentile(values, [25.0, 75.0])
    if means[0] == means[1]:
        means = np.array([values.min(), values.max()], dtype=np.float64)
    variances = np.full(2, max(values.var(), VARIANCE_FLOOR))
    weights = np.array([0.5, 0.5])

    history: list[float] = []
    for _ in range(iterations):
        log_joint = _log_density(values, means, variances, weights)
        log_norm = np.logaddexp(log_joint[:, 0], log_joint[:, 1])
        history.append(float(log_norm.sum()))
        resp = np.exp(log_joint - log_norm[:, None])

        counts = np.maximum(resp.sum(axis=0), 1e-300)
        means = (resp * values[:, None]).sum(axis=0) / counts
        diff = values[:, None] - means[None, :]
        variances = np.maximum((resp * diff * diff).sum(axis=0) / counts,
                               VARIANCE_FLOOR)
        weights = counts / n
        if len(history) > 1 and history[-1] - history[-2] < tolerance:
            break

    log_joint = _log_density(values, means, variances, weights)
    log_norm = np.logaddexp(log_joint[:, 0], log_joint[:, 1])
    return Gmm1dParams(
        means=means,
        variances=variances,
        weights=weights,
        responsibilities=np.exp(log_joint - log_norm[:, None]),
        log_likelihood=float(log_norm.sum()),
        log_likelihoods=history,
    )


def _require_logit_difference(dyn: DynamicsMatrix) -> None:
    if dyn.signal != "logit-difference":
        raise InvalidSignalError(
            f"baseline needs unquantized logit-difference signals, got {dyn.signal!r}")


def _split_by_mixture(scores: np.ndarray) -> np.ndarray:
    """Boolean flags for points assigned (responsibility > 0.5) to the
    lower-mean component."""
    params = gmm1d_em(scores)
    noisy_component = int(np.argmin(params.means))
    return params.responsibilities[:, noisy_component] > 0.5


def avg_encoder_detect(dyn: DynamicsMatrix) -> tuple[np.ndarray, np.ndarray]:
    """(ids, flags) for original rows: mixture split of epoch-averaged signals."""
    _require_logit_difference(dyn)
    orig = dyn.original_mask
    flags = _split_by_mixture(summarize(dyn)[orig])
    return dyn.ids[orig].copy(), flags


def aum_detect(dyn: DynamicsMatrix) -> tuple[np.ndarray, np.ndarray]:
    """(ids, flags) for original rows: mixture split of epoch-summed signals."""
    _require_logit_difference(dyn)
    orig = dyn.original_mask
    flags = _split_by_mixture(dyn.values[orig].sum(axis=1))
    return dyn.ids[orig].copy(), flags
