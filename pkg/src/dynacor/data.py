"""Synthetic labeled datasets, label-noise injection, and noise-rate algebra.

Datasets are immutable value objects; every generator and injector is a pure
function of its inputs and a seed, so identical seeds reproduce bit-identical
datasets.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (GenerationError, InvalidCorruptionConfigError,
                     InvalidNoiseSpecError, MissingTruthError, ParseError)

PROV_ORIGINAL = "orig"
PROV_CORRUPTED = "corr"

NOISE_KINDS = ("symmetric", "asymmetric-next", "instance-dependent")

FLOAT_FORMAT = "%.17g"  # round-trips float64 exactly


@dataclass(frozen=True)
class LabeledDataset:
    """Feature vectors with observed labels, optional hidden true labels,
    and per-instance provenance (original vs. corrupted)."""

    ids: np.ndarray                      # (N,) int64, unique
    features: np.ndarray                 # (N, d) float64
    labels: np.ndarray                   # (N,) int64 observed labels
    num_classes: int
    true_labels: np.ndarray | None = None
    provenance: np.ndarray | None = None  # (N,) of {"orig", "corr"}; default all-orig
    source_ids: np.ndarray | None = None  # (N,) int64; -1 where not applicable

    def __post_init__(self):
        n = len(self.ids)
        if n == 0:
            raise ValueError("dataset must contain at least one instance")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.features.shape[0] != n or self.features.ndim != 2:
            raise ValueError("features must be (N, d)")
        if not np.isfinite(self.features).all():
            raise ValueError("features must be finite")
        if len(np.unique(self.ids)) != n:
            raise ValueError("instance ids must be unique")
        for name, arr in (("labels", self.labels), ("true_labels", self.true_labels)):
            if arr is None:
                continue
            if arr.shape != (n,):
                raise ValueError(f"{name} must be (N,)")
            if arr.min() < 0 or arr.max() >= self.num_classes:
                raise ValueError(f"{name} outside [0, {self.num_classes})")
        if self.provenance is None:
            object.__setattr__(self, "provenance", np.full(n, PROV_ORIGINAL, dtype="<U4"))
        elif self.provenance.shape != (n,):
            raise ValueError("provenance must be (N,)")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class NoiseSpec:
    """Declarative description of a label-noise injection."""

    kind: str
    rate: float
    seed: int

    def validate(self, num_classes: int) -> None:
        if self.kind not in NOISE_KINDS:
            raise InvalidNoiseSpecError(f"unknown noise kind {self.kind!r}")
        if not 0.0 <= self.rate < 1.0:
            raise InvalidNoiseSpecError(f"noise rate {self.rate} outside [0, 1)")
        if self.kind in ("symmetric", "instance-dependent"):
            bound = 1.0 - 1.0 / num_classes
            if self.rate >= bound:
                raise InvalidNoiseSpecError(
                    f"rate {self.rate} violates diagonal dominance (needs < {bound})")
        if self.kind == "asymmetric-next" and self.rate >= 0.5:
            raise InvalidNoiseSpecError(
                f"asymmetric-next rate {self.rate} violates diagonal dominance (needs < 0.5)")


@dataclass(frozen=True)
class NoiseRateReport:
    """Measured and analytic noise-rate quantities for one configuration."""

    measured_rate: float
    expected_corrupted_rate: float
    lower_bound: float
    overall_rate: float
    gamma: float


def make_blobs(classes: int, per_class: int, dim: int, spread: float = 1.0,
               separation: float = 6.0, seed: int = 0) -> LabeledDataset:
    """Isotropic Gaussian clusters whose centers are mutually >= `separation` apart.

    Observed labels start identical to the true cluster indices; provenance is
    all-original.
    """
    if classes < 2 or per_class < 1 or dim < 2:
        raise ValueError("need classes >= 2, per_class >= 1, dim >= 2")
    if spread <= 0.0 or separation <= 0.0:
        raise ValueError("spread and separation must be positive")
    rng = np.random.default_rng(seed)
    centers = None
    for _ in range(32):
        raw = rng.standard_normal((classes, dim))
        diffs = raw[:, None, :] - raw[None, :, :]
        dists = np.sqrt((diffs ** 2).sum(axis=2))
        closest = dists[~np.eye(classes, dtype=bool)].min()
        if closest > 0.0:
            centers = raw * (separation / closest)
            break
    if centers is None:
        raise GenerationError("could not place mutually separated centers")

    n = classes * per_class
    true_labels = np.repeat(np.arange(classes, dtype=np.int64), per_class)
    features = centers[true_labels] + spread * rng.standard_normal((n, dim))
    return LabeledDataset(
        ids=np.arange(n, dtype=np.int64),
        features=features,
        labels=true_labels.copy(),
        num_classes=classes,
        true_labels=true_labels,
    )


def _truncated_normal(rng: np.random.Generator, mean: float, sd: float,
                      size: int) -> np.ndarray:
    """Rejection sampling of N(mean, sd^2) restricted to [0, 1]."""
    out = rng.normal(mean, sd, size=size)
    bad = (out < 0.0) | (out > 1.0)
    while bad.any():
        out[bad] = rng.normal(mean, sd, size=int(bad.sum()))
        bad = (out < 0.0) | (out > 1.0)
    return out


def _softmax_rows(p: np.ndarray) -> np.ndarray:
    shifted = p - p.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def inject_noise(ds: LabeledDataset, spec: NoiseSpec) -> LabeledDataset:
    """Return a copy of `ds` whose observed labels carry the requested noise.

    Symmetric and asymmetric-next flip exactly round(rate * N) instances;
    instance-dependent noise samples a per-instance flip probability from a
    truncated normal around the rate and flips according to feature
    projections, so its measured rate is stochastic around the target.
    """
    spec.validate(ds.num_classes)
    if not (ds.provenance == PROV_ORIGINAL).all():
        raise InvalidNoiseSpecError("noise injection expects an all-original dataset")
    rng = np.random.default_rng(spec.seed)
    n = len(ds)
    c = ds.num_classes
    labels = ds.labels.copy()

    if spec.kind == "symmetric":
        n_flip = int(round(spec.rate * n))
        idx = rng.choice(n, size=n_flip, replace=False)
        offsets = rng.integers(0, c - 1, size=n_flip)
        labels[idx] = np.where(offsets >= labels[idx], offsets + 1, offsets)
    elif spec.kind == "asymmetric-next":
        n_flip = int(round(spec.rate * n))
        idx = rng.choice(n, size=n_flip, replace=False)
        labels[idx] = (labels[idx] + 1) % c
    else:  # instance-dependent
        projections = rng.standard_normal((c, ds.n_features, c))
        q = _truncated_normal(rng, spec.rate, 0.1, n)
        scores = np.einsum("nd,ndc->nc", ds.features, projections[ds.labels],
                           optimize=True)
        rows = np.arange(n)
        scores[rows, ds.labels] = -np.inf
        probs = q[:, None] * _softmax_rows(scores)
        probs[rows, ds.labels] = 1.0 - q
        u = rng.random(n)
        cdf = np.cumsum(probs, axis=1)
        labels = np.minimum((cdf < u[:, None]).sum(axis=1), c - 1).astype(np.int64)

    return replace(ds, labels=labels)


def measured_noise_rate(ds: LabeledDataset) -> float:
    """Fraction of instances whose observed label differs from the true label."""
    if ds.true_labels is None:
        raise MissingTruthError("measured noise rate needs true labels")
    return float(np.mean(ds.labels != ds.true_labels))


def expected_corrupted_noise_rate(rate: float, num_classes: int) -> float:
    """Noise rate of a fully label-corrupted copy: 1 - rate / (C - 1)."""
    if num_classes < 2:
        raise InvalidNoiseSpecError("num_classes must be >= 2")
    if not 0.0 <= rate < 1.0 - 1.0 / num_classes:
        raise InvalidNoiseSpecError(
            f"rate {rate} outside [0, 1 - 1/{num_classes})")
    return 1.0 - rate / (num_classes - 1)


def overall_noise_rate(rate: float, corrupted_rate: float, gamma: float) -> float:
    """Noise rate of the pooled original+corrupted set."""
    if not 0.0 < gamma <= 1.0:
        raise InvalidCorruptionConfigError(f"gamma {gamma} outside (0, 1]")
    for name, value in (("rate", rate), ("corrupted_rate", corrupted_rate)):
        if not 0.0 <= value <= 1.0:
            raise InvalidNoiseSpecError(f"{name} {value} outside [0, 1]")
    return (rate + gamma * corrupted_rate) / (1.0 + gamma)


def noise_rate_report(ds: LabeledDataset, gamma: float) -> NoiseRateReport:
    """Bundle the measured rate with the analytic corrupted/pooled rates."""
    eta = measured_noise_rate(ds)
    eta_gamma = expected_corrupted_noise_rate(eta, ds.num_classes)
    return NoiseRateReport(
        measured_rate=eta,
        expected_corrupted_rate=eta_gamma,
        lower_bound=1.0 - 1.0 / ds.num_classes,
        overall_rate=overall_noise_rate(eta, eta_gamma, gamma),
        gamma=gamma,
    )


# ---- CSV serialization ----------------------------------------------------


def write_dataset_csv(ds: LabeledDataset, path: str | Path) -> None:
    """Write `id,provenance,label,true_label,f0..f{d-1}` (+ source_id when present)."""
    path = Path(path)
    has_source = ds.source_ids is not None
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["id", "provenance", "label", "true_label"]
        if has_source:
            header.append("source_id")
        header += [f"f{i}" for i in range(ds.n_features)]
        writer.writerow(header)
        for i in range(len(ds)):
            row = [int(ds.ids[i]), ds.provenance[i], int(ds.labels[i]),
                   "" if ds.true_labels is None else int(ds.true_labels[i])]
            if has_source:
                row.append(int(ds.source_ids[i]))
            row += [FLOAT_FORMAT % v for v in ds.features[i]]
            writer.writerow(row)


def read_dataset_csv(path: str | Path, num_classes: int | None = None) -> LabeledDataset:
    """Inverse of write_dataset_csv; num_classes is inferred from the labels
    unless given explicitly."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty dataset file", line=1) from None
        required = ["id", "provenance", "label", "true_label"]
        for col in required:
            if col not in header:
                raise ParseError(f"missing column {col!r}", line=1)
        has_source = "source_id" in header
        feature_cols = [c for c in header if c.startswith("f") and c[1:].isdigit()]
        if not feature_cols:
            raise ParseError("no feature columns found", line=1)
        col_idx = {c: header.index(c) for c in required + feature_cols}
        if has_source:
            col_idx["source_id"] = header.index("source_id")

        ids, prov, labels, trues, sources, feats = [], [], [], [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ids.append(int(row[col_idx["id"]]))
                prov.append(row[col_idx["provenance"]])
                labels.append(int(row[col_idx["label"]]))
                raw_true = row[col_idx["true_label"]]
                trues.append(None if raw_true == "" else int(raw_true))
                if has_source:
                    sources.append(int(row[col_idx["source_id"]]))
                feats.append([float(row[col_idx[c]]) for c in feature_cols])
            except (ValueError, IndexError) as exc:
                raise ParseError(str(exc), line=line_no) from None

    if not ids:
        raise ParseError("dataset file has no data rows", line=2)
    with_truth = [t for t in trues if t is not None]
    if with_truth and len(with_truth) != len(trues):
        raise ParseError("true_label must be present for all rows or none")
    labels_arr = np.asarray(labels, dtype=np.int64)
    true_arr = np.asarray(trues, dtype=np.int64) if with_truth else None
    if num_classes is None:
        top = labels_arr.max()
        if true_arr is not None:
            top = max(top, true_arr.max())
        num_classes = int(top) + 1
    return LabeledDataset(
        ids=np.asarray(ids, dtype=np.int64),
        features=np.asarray(feats, dtype=np.float64),
        labels=labels_arr,
        num_classes=num_classes,
        true_labels=true_arr,
        provenance=np.asarray(prov, dtype="<U4"),
        source_ids=np.asarray(sources, dtype=np.int64) if has_source else None,
    )
