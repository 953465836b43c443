"""Detection metrics: binary F1 with noisy-as-positive, the flag-everything
baseline, the Davies-Bouldin index, and oracle epoch selection.

Edge conventions for F1: zero predicted positives with zero true positives
scores 1; zero predicted positives with true positives present scores 0.
"""
from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .errors import (DegenerateSeparationError, IdMismatchError,
                     UndefinedBaselineError)


def binary_scores(predicted: np.ndarray, truth: np.ndarray
                  ) -> tuple[float, float, float]:
    """(precision, recall, f1) for aligned boolean arrays, noisy = positive."""
    predicted = np.asarray(predicted, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if predicted.shape != truth.shape:
        raise IdMismatchError(f"shape mismatch: {predicted.shape} vs {truth.shape}")
    tp = int((predicted & truth).sum())
    pp = int(predicted.sum())
    ap = int(truth.sum())
    if pp == 0 and ap == 0:
        return 1.0, 1.0, 1.0
    precision = tp / pp if pp else 0.0
    recall = tp / ap if ap else 1.0
    if precision + recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2.0 * precision * recall / (precision + recall)


def f1(predicted: Mapping[int, bool], truth: Mapping[int, bool]
       ) -> tuple[float, float, float]:
    """(precision, recall, f1) for verdict maps keyed by instance id."""
    if set(predicted) != set(truth):
        raise IdMismatchError("verdict and truth id sets differ")
    ids = sorted(predicted)
    pred = np.array([predicted[i] for i in ids], dtype=bool)
    true = np.array([truth[i] for i in ids], dtype=bool)
    return binary_scores(pred, true)


def flag_all_baseline(rate: float) -> float:
    """F1 of predicting every instance noisy at noise rate `rate`: 2r/(1+r)."""
    if not 0.0 < rate <= 1.0:
        raise UndefinedBaselineError(f"flag-all baseline undefined for rate {rate}")
    return 2.0 * rate / (1.0 + rate)


def dbi(reps: np.ndarray, assignments: np.ndarray) -> float:
    """Davies-Bouldin index for a two-cluster split with Euclidean dispersion."""
    reps = np.asarray(reps, dtype=np.float64)
    assignments = np.asarray(assignments)
    labels = np.unique(assignments)
    if len(labels) != 2:
        raise DegenerateSeparationError("dbi needs exactly two nonempty clusters")
    centroids, dispersions = [], []
    for lab in labels:
        members = reps[assignments == lab]
        center = members.mean(axis=0)
        centroids.append(center)
        dispersions.append(float(np.linalg.norm(members - center, axis=1).mean()))
    separation = float(np.linalg.norm(centroids[0] - centroids[1]))
    if separation == 0.0:
        raise DegenerateSeparationError("cluster centroids coincide")
    # for two clusters the max over j != i is the same ratio for both i
    return (dispersions[0] + dispersions[1]) / separation


def opt_epoch(per_epoch_verdicts: Sequence[Mapping[int, bool]],
              truth: Mapping[int, bool]) -> tuple[int, float]:
    """(best epoch, best F1) over a verdict trajectory; epochs are 1-based and
    ties resolve to the earliest epoch."""
    if not per_epoch_verdicts:
        raise ValueError("verdict trajectory is empty")
    best_epoch, best_f1 = 1, -1.0
    for epoch, verdicts in enumerate(per_epoch_verdicts, start=1):
        _, _, score = f1(verdicts, truth)
        if score > best_f1:
            best_epoch, best_f1 = epoch, score
    return best_epoch, best_f1
