"""Classifier training with per-instance training-signal trajectories.

The classifier minimizes the sum of two dataset-level means: mean
cross-entropy over original instances plus mean cross-entropy over corrupted
instances. Batches are drawn from the shuffled pooled set and each instance
is weighted by M / |its provenance group|, so the weighted batch mean equals
the two-term objective in expectation.

At the end of every epoch a full read-only forward pass records one scalar
training signal per instance; the stacked columns form the dynamics matrix.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .data import PROV_ORIGINAL, FLOAT_FORMAT, LabeledDataset
from .errors import (InvalidClassCountError, InvalidLabelError,
                     InvalidSignalError, ParseError, TrainingDivergedError)
from .nn import Mlp, SgdMomentum, Tensor, cross_entropy_batch, softmax

SIGNAL_KINDS = (
    "loss",
    "probability",
    "probability-difference",
    "logit-difference",
    "quantized-logit-difference",
)


@dataclass(frozen=True)
class ClassifierConfig:
    hidden: tuple[int, ...] = (64, 64)
    learning_rate: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 5e-4
    epochs: int = 30
    batch_size: int = 128
    seed: int = 0
    signal: str = "quantized-logit-difference"

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.learning_rate <= 0.0:
            raise ValueError("learning rate must be positive")
        if self.signal not in SIGNAL_KINDS:
            raise InvalidSignalError(f"unknown signal kind {self.signal!r}")


@dataclass(frozen=True)
class DynamicsMatrix:
    """Per-instance, per-epoch training signals plus row metadata.

    Rows follow the pooled dataset order; `is_noisy` is evaluation-only
    metadata and is never consulted by any detector.
    """

    values: np.ndarray            # (M, E) float64
    ids: np.ndarray               # (M,) int64
    provenance: np.ndarray        # (M,) of {"orig", "corr"}
    observed_labels: np.ndarray   # (M,) int64
    signal: str
    is_noisy: np.ndarray | None = None  # (M,) int8 of {0, 1}

    def __post_init__(self):
        m, _ = self.values.shape
        if np.isnan(self.values).any():
            raise ValueError("dynamics matrix contains NaN")
        if self.signal == "quantized-logit-difference":
            if not np.isin(self.values, (-1.0, 1.0)).all():
                raise ValueError("quantized signals must be exactly +/-1")
        for name, arr in (("ids", self.ids), ("provenance", self.provenance),
                          ("observed_labels", self.observed_labels)):
            if arr.shape != (m,):
                raise ValueError(f"{name} must match row count {m}")
        if self.is_noisy is not None and self.is_noisy.shape != (m,):
            raise ValueError("is_noisy must match row count")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_epochs(self) -> int:
        return self.values.shape[1]

    @property
    def original_mask(self) -> np.ndarray:
        return self.provenance == PROV_ORIGINAL


def signal_value(logits: np.ndarray, label: int, kind: str) -> float:
    """One scalar training signal from a length-C logit vector."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape[-1] < 2:
        raise InvalidClassCountError("signals need at least two classes")
    if not 0 <= label < logits.shape[-1]:
        raise InvalidLabelError(f"label {label} outside [0, {logits.shape[-1]})")
    return float(signal_matrix(logits[None, :], np.array([label]), kind)[0])


def signal_matrix(logits: np.ndarray, labels: np.ndarray, kind: str) -> np.ndarray:
    """Vectorized signals for (M, C) logits against (M,) observed labels."""
    if kind not in SIGNAL_KINDS:
        raise InvalidSignalError(f"unknown signal kind {kind!r}")
    if logits.shape[-1] < 2:
        raise InvalidClassCountError("signals need at least two classes")
    rows = np.arange(logits.shape[0])
    if kind == "loss":
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=1))
        return log_z - shifted[rows, labels]
    if kind == "probability":
        return softmax(logits)[rows, labels]
    if kind == "probability-difference":
        probs = softmax(logits)
        return probs.max(axis=1) - probs[rows, labels]
    # logit difference: observed-label logit minus the best competing logit
    masked = logits.copy()
    masked[rows, labels] = -np.inf
    diff = logits[rows, labels] - masked.max(axis=1)
    if kind == "logit-difference":
        return diff
    return np.where(diff >= 0.0, 1.0, -1.0)  # sign(0) := +1


def train_and_record(pooled: LabeledDataset, cfg: ClassifierConfig
                     ) -> tuple[DynamicsMatrix, Mlp]:
    """Train the classifier on the pooled set and record one signal column
    per epoch. Deterministic given (pooled, cfg)."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    m_total = len(pooled)
    model = Mlp([pooled.n_features, *cfg.hidden, pooled.num_classes], rng)
    opt = SgdMomentum(model.params, cfg.learning_rate, cfg.momentum,
                      cfg.weight_decay)

    orig_mask = pooled.provenance == PROV_ORIGINAL
    weights = np.empty(m_total)
    for mask in (orig_mask, ~orig_mask):
        count = int(mask.sum())
        if count:
            weights[mask] = m_total / count

    values = np.empty((m_total, cfg.epochs))
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(m_total)
        for start in range(0, m_total, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            logits = model(Tensor(pooled.features[idx]))
            loss = cross_entropy_batch(logits, pooled.labels[idx],
                                       weights[idx] / len(idx))
            if not np.isfinite(loss.data):
                raise TrainingDivergedError(epoch)
            opt.zero_grad()
            loss.backward()
            opt.step()
        # read-only recording pass; parameters are not touched
        full_logits = model.logits(pooled.features)
        values[:, epoch - 1] = signal_matrix(full_logits, pooled.labels, cfg.signal)

    is_noisy = None
    if pooled.true_labels is not None:
        is_noisy = (pooled.labels != pooled.true_labels).astype(np.int8)
    dyn = DynamicsMatrix(
        values=values,
        ids=pooled.ids.copy(),
        provenance=pooled.provenance.copy(),
        observed_labels=pooled.labels.copy(),
        signal=cfg.signal,
        is_noisy=is_noisy,
    )
    return dyn, model


def summarize(dyn: DynamicsMatrix) -> np.ndarray:
    """Collapse each trajectory to its epoch-mean scalar."""
    return dyn.values.mean(axis=1)


def quantize(dyn: DynamicsMatrix) -> DynamicsMatrix:
    """Map logit-difference trajectories to their +/-1 sign pattern."""
    if dyn.signal == "quantized-logit-difference":
        return dyn
    if dyn.signal != "logit-difference":
        raise InvalidSignalError(
            f"cannot quantize {dyn.signal!r} signals; need logit-difference")
    return DynamicsMatrix(
        values=np.where(dyn.values >= 0.0, 1.0, -1.0),
        ids=dyn.ids,
        provenance=dyn.provenance,
        observed_labels=dyn.observed_labels,
        signal="quantized-logit-difference",
        is_noisy=dyn.is_noisy,
    )


# ---- CSV + sidecar serialization -------------------------------------------


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def write_dynamics_csv(dyn: DynamicsMatrix, path: str | Path,
                       config: ClassifierConfig | None = None) -> None:
    """Write `id,provenance,observed_label,is_noisy,s1..sE` plus a JSON sidecar
    carrying the signal kind, epoch count, seed, and classifier config."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "provenance", "observed_label", "is_noisy"]
                        + [f"s{e}" for e in range(1, dyn.n_epochs + 1)])
        for i in range(dyn.n_rows):
            noisy = "" if dyn.is_noisy is None else int(dyn.is_noisy[i])
            writer.writerow([int(dyn.ids[i]), dyn.provenance[i],
                             int(dyn.observed_labels[i]), noisy]
                            + [FLOAT_FORMAT % v for v in dyn.values[i]])
    sidecar = {
        "signal": dyn.signal,
        "epochs": dyn.n_epochs,
        "seed": None if config is None else config.seed,
        "classifier": None if config is None else asdict(config),
    }
    with _sidecar_path(path).open("w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_dynamics_csv(path: str | Path, signal: str | None = None) -> DynamicsMatrix:
    """Read a dynamics CSV; the signal kind comes from the sidecar unless given."""
    path = Path(path)
    if signal is None:
        sidecar = _sidecar_path(path)
        if not sidecar.exists():
            raise ParseError(f"no sidecar {sidecar.name}; pass the signal kind explicitly")
        with sidecar.open() as fh:
            signal = json.load(fh)["signal"]

    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty dynamics file", line=1) from None
        for col in ("id", "provenance", "observed_label", "is_noisy"):
            if col not in header:
                raise ParseError(f"missing column {col!r}", line=1)
        signal_cols = [c for c in header if c.startswith("s") and c[1:].isdigit()]
        if not signal_cols:
            raise ParseError("no signal columns found", line=1)
        idx = {c: header.index(c) for c in
               ("id", "provenance", "observed_label", "is_noisy", *signal_cols)}

        ids, prov, labels, noisy, rows = [], [], [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ids.append(int(row[idx["id"]]))
                prov.append(row[idx["provenance"]])
                labels.append(int(row[idx["observed_label"]]))
                raw = row[idx["is_noisy"]]
                noisy.append(None if raw == "" else int(raw))
                rows.append([float(row[idx[c]]) for c in signal_cols])
            except (ValueError, IndexError) as exc:
                raise ParseError(str(exc), line=line_no) from None
    if not ids:
        raise ParseError("dynamics file has no data rows", line=2)
    flags = [x for x in noisy if x is not None]
    if flags and len(flags) != len(noisy):
        raise ParseError("is_noisy must be present for all rows or none")
    return DynamicsMatrix(
        values=np.asarray(rows, dtype=np.float64),
        ids=np.asarray(ids, dtype=np.int64),
        provenance=np.asarray(prov, dtype="<U4"),
        observed_labels=np.asarray(labels, dtype=np.int64),
        signal=signal,
        is_noisy=np.asarray(noisy, dtype=np.int8) if flags else None,
    )
