"""Label corruption: sample a subset, jitter features, flip labels uniformly.

The corrupted companion set is guaranteed noisy at a high rate, which gives
the downstream clustering a reference population of wrong-label dynamics.
Feature jitter stands in for weak augmentation on vector data: each sampled
instance gets per-coordinate Gaussian noise scaled by the empirical feature
standard deviation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import PROV_CORRUPTED, PROV_ORIGINAL, LabeledDataset
from .errors import (EmptyCorruptionError, IncompatibleDatasetsError,
                     InvalidClassCountError, InvalidCorruptionConfigError)


@dataclass(frozen=True)
class CorruptionConfig:
    """Corruption rate gamma in (0, 1], jitter as a fraction of per-feature std."""

    gamma: float = 0.1
    jitter: float = 0.05
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise InvalidCorruptionConfigError(f"gamma {self.gamma} outside (0, 1]")
        if not np.isfinite(self.jitter) or self.jitter < 0.0:
            raise InvalidCorruptionConfigError(f"jitter {self.jitter} must be finite and >= 0")


def corrupt(ds: LabeledDataset, cfg: CorruptionConfig) -> LabeledDataset:
    """Build the corrupted companion set.

    Samples round(gamma * N) instances without replacement, jitters their
    features, and assigns each a label drawn uniformly from the classes other
    than its source's observed label. True labels ride along for evaluation
    only; new ids are disjoint from the source ids and the source mapping is
    recorded.
    """
    cfg.validate()
    if ds.num_classes < 2:
        raise InvalidClassCountError("corruption needs at least two classes")
    if not (ds.provenance == PROV_ORIGINAL).all():
        raise InvalidCorruptionConfigError("corruption expects an all-original dataset")
    n = len(ds)
    m = int(round(cfg.gamma * n))
    if m == 0:
        raise EmptyCorruptionError(f"round(gamma * N) == 0 for gamma={cfg.gamma}, N={n}")

    rng = np.random.default_rng(cfg.seed)
    picks = rng.choice(n, size=m, replace=False)
    offsets = rng.integers(0, ds.num_classes - 1, size=m)
    src_labels = ds.labels[picks]
    new_labels = np.where(offsets >= src_labels, offsets + 1, offsets)

    features = ds.features[picks].copy()
    if cfg.jitter > 0.0:
        stds = ds.features.std(axis=0)
        features += cfg.jitter * stds * rng.standard_normal(features.shape)

    return LabeledDataset(
        ids=ds.ids.max() + 1 + np.arange(m, dtype=np.int64),
        features=features,
        labels=new_labels.astype(np.int64),
        num_classes=ds.num_classes,
        true_labels=None if ds.true_labels is None else ds.true_labels[picks].copy(),
        provenance=np.full(m, PROV_CORRUPTED, dtype="<U4"),
        source_ids=ds.ids[picks].copy(),
    )


def pool(original: LabeledDataset, corrupted: LabeledDataset) -> LabeledDataset:
    """Concatenate original and corrupted sets, originals first, provenance kept."""
    if original.n_features != corrupted.n_features:
        raise IncompatibleDatasetsError(
            f"feature dims differ: {original.n_features} vs {corrupted.n_features}")
    if original.num_classes != corrupted.num_classes:
        raise IncompatibleDatasetsError(
            f"class counts differ: {original.num_classes} vs {corrupted.num_classes}")
    if np.intersect1d(original.ids, corrupted.ids).size:
        raise IncompatibleDatasetsError("id sets overlap")
    if (original.true_labels is None) != (corrupted.true_labels is None):
        raise IncompatibleDatasetsError("true labels present in one set but not the other")

    def cat(a, b):
        return np.concatenate([a, b])

    source_ids = None
    if original.source_ids is not None or corrupted.source_ids is not None:
        orig_src = (original.source_ids if original.source_ids is not None
                    else np.full(len(original), -1, dtype=np.int64))
        corr_src = (corrupted.source_ids if corrupted.source_ids is not None
                    else np.full(len(corrupted), -1, dtype=np.int64))
        source_ids = cat(orig_src, corr_src)

    return LabeledDataset(
        ids=cat(original.ids, corrupted.ids),
        features=np.concatenate([original.features, corrupted.features], axis=0),
        labels=cat(original.labels, corrupted.labels),
        num_classes=original.num_classes,
        true_labels=(None if original.true_labels is None
                     else cat(original.true_labels, corrupted.true_labels)),
        provenance=cat(original.provenance, corrupted.provenance),
        source_ids=source_ids,
    )
