"""The detection core: encode trajectories, cluster them around two trainable
centroids, and stop by a self-supervised clustering-quality metric.

A three-stage 1-D conv net maps each trajectory to a representation z. Soft
assignments to the noisy/clean centroids use a Student-t style kernel over
cosine distance, q_noisy = (1+d_n)^-1 / ((1+d_n)^-1 + (1+d_c)^-1); because
cosine distance is bounded by 2, every q lands in [1/4, 3/4].

Each training epoch freezes a sharpened full-set target distribution, then
takes mini-batch gradient steps on KL(target || assignment) plus an optional
alignment term that pulls the per-provenance means of each predicted cluster
together. Verdict partitions are constants for the gradient: only the
representation means are differentiated through.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np

from .data import PROV_CORRUPTED, PROV_ORIGINAL
from .errors import (DegenerateClusterError, DegenerateVectorError,
                     EmptyClusterInitError, InvalidLengthError, ParseError)
from .metrics import binary_scores
from .nn import Adam, Conv1d, Dense, Tensor, kl_divergence
from .report import DetectionReport
from .trainer import DynamicsMatrix, quantize

NORM_EPS = 1e-12
CHECKPOINT_MAGIC = b"DYNC1"


@dataclass(frozen=True)
class EncoderConfig:
    channels: tuple[int, int, int] = (16, 32, 32)
    kernels: tuple[int, int, int] = (5, 3, 3)
    rep_dim: int = 32
    alpha: float = 0.5           # alignment-loss weight
    epochs: int = 10
    batch_size: int = 1024
    # 1e-3 rather than a schedule-era 1e-5: the trainable centroids start as
    # near-coincident provenance means and need ~50 adam steps to reorient
    learning_rate: float = 1e-3
    weight_decay: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    quantize_input: bool = True  # map logit-difference inputs to their sign pattern

    def validate(self) -> None:
        if self.rep_dim < 2:
            raise ValueError("rep_dim must be >= 2")
        if not np.isfinite(self.alpha) or self.alpha < 0.0:
            raise ValueError("alpha must be finite and >= 0")
        if len(self.channels) != 3 or len(self.kernels) != 3:
            raise ValueError("encoder uses exactly three conv stages")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch size must be >= 1")

    @property
    def min_length(self) -> int:
        return sum(k - 1 for k in self.kernels) + 1


class DynamicsEncoder:
    """Three conv1d+rectifier stages, global mean-pool, dense head to rep_dim."""

    def __init__(self, cfg: EncoderConfig, trajectory_length: int,
                 rng: np.random.Generator):
        if trajectory_length < cfg.min_length:
            raise InvalidLengthError(
                f"trajectory length {trajectory_length} < minimum {cfg.min_length} "
                f"for kernels {cfg.kernels}")
        self.cfg = cfg
        self.trajectory_length = trajectory_length
        chans = [1, *cfg.channels]
        self.convs = [Conv1d(chans[i], chans[i + 1], cfg.kernels[i], rng)
                      for i in range(3)]
        # nonzero bias init: a row whose rectifier activations all die would
        # otherwise map to the zero vector, where the cosine kernel is
        # undefined; with these offsets dead rows land on the (nonzero) head
        # bias instead
        for conv in self.convs:
            conv.bias.data[:] = 0.01
        self.head = Dense(cfg.channels[-1], cfg.rep_dim, rng)
        self.head.bias.data = 0.01 * rng.standard_normal(cfg.rep_dim)

    @property
    def params(self) -> list[Tensor]:
        out = [p for conv in self.convs for p in conv.params]
        return out + self.head.params

    def __call__(self, x: Tensor) -> Tensor:
        for conv in self.convs:
            x = conv(x).relu()
        return self.head(x.mean(axis=2))

    def encode(self, rows: np.ndarray) -> np.ndarray:
        """Representations for (B, E) trajectories, no gradient tracking."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        return self(Tensor(rows[:, None, :])).data


@dataclass
class ClusterModel:
    """Encoder parameters plus the two trainable centroids."""

    encoder: DynamicsEncoder
    mu_noisy: Tensor   # (1, rep_dim)
    mu_clean: Tensor   # (1, rep_dim)
    config: EncoderConfig
    selected_epoch: int | None = None

    @property
    def params(self) -> list[Tensor]:
        return self.encoder.params + [self.mu_noisy, self.mu_clean]

    def state(self) -> list[np.ndarray]:
        return [p.data.copy() for p in self.params]

    def load_state(self, state: list[np.ndarray]) -> None:
        for p, arr in zip(self.params, state):
            p.data = arr.copy()

    def encode(self, rows: np.ndarray) -> np.ndarray:
        return self.encoder.encode(rows)

    def assign(self, reps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return assign(reps, self)


@dataclass
class FitTrace:
    """Per-epoch diagnostics from one fit: validation metric, losses, and the
    epoch-end verdicts split by provenance (corrupted rows never enter the
    detection report, but their verdicts stay available here)."""

    metrics: list[float | None] = field(default_factory=list)
    cluster_losses: list[float] = field(default_factory=list)
    alignment_losses: list[float] = field(default_factory=list)
    original_verdicts: list[np.ndarray] = field(default_factory=list)
    corrupted_verdicts: list[np.ndarray] = field(default_factory=list)


# ---- assignment algebra (plain arrays) --------------------------------------


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - <a, b> / (||a|| ||b||), in [0, 2]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na <= NORM_EPS or nb <= NORM_EPS:
        raise DegenerateVectorError("cosine distance undefined for near-zero vectors")
    return 1.0 - float(a @ b) / (na * nb)


def _cosine_distances(reps: np.ndarray, centroid: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(reps, axis=1)
    cnorm = float(np.linalg.norm(centroid))
    if cnorm <= NORM_EPS or (norms <= NORM_EPS).any():
        raise DegenerateVectorError("cosine distance undefined for near-zero vectors")
    return 1.0 - (reps @ centroid) / (norms * cnorm)


def init_centroids(original_reps: np.ndarray, corrupted_reps: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate-wise means: clean centroid from the original representations,
    noisy centroid from the corrupted ones."""
    for name, reps in (("original", original_reps), ("corrupted", corrupted_reps)):
        if len(reps) == 0:
            raise EmptyClusterInitError(f"{name} representation set is empty")
    return (np.asarray(original_reps, dtype=np.float64).mean(axis=0),
            np.asarray(corrupted_reps, dtype=np.float64).mean(axis=0))


def assign(reps: np.ndarray, model: "ClusterModel") -> tuple[np.ndarray, np.ndarray]:
    """Soft assignments (q_noisy, q_clean) for (B, d) representations."""
    reps = np.atleast_2d(np.asarray(reps, dtype=np.float64))
    inv_noisy = 1.0 / (1.0 + _cosine_distances(reps, model.mu_noisy.data[0]))
    inv_clean = 1.0 / (1.0 + _cosine_distances(reps, model.mu_clean.data[0]))
    q_noisy = inv_noisy / (inv_noisy + inv_clean)
    return q_noisy, 1.0 - q_noisy


def verdict(q_noisy) -> np.ndarray | int:
    """1 iff q_noisy strictly exceeds q_clean; the 0.5 tie counts as clean."""
    arr = np.asarray(q_noisy)
    out = (arr > 0.5).astype(np.int8)
    return int(out) if arr.ndim == 0 else out


def target_distribution(q: np.ndarray) -> np.ndarray:
    """Sharpened, frequency-normalized targets from (M, 2) soft assignments.

    Implemented as q * (q / column_sum) per column before renormalizing, which
    keeps the single-row case exactly equal to q.
    """
    q = np.asarray(q, dtype=np.float64)
    sums = q.sum(axis=0)
    if (sums <= 0.0).any():
        raise DegenerateClusterError("a cluster has zero total assignment mass")
    sharpened = q * (q / sums)
    return sharpened / sharpened.sum(axis=1, keepdims=True)


def cluster_loss(targets: np.ndarray, q: np.ndarray) -> float:
    """Sum of row-wise KL(target || assignment)."""
    if targets.shape != q.shape:
        raise ValueError(f"shape mismatch: {targets.shape} vs {q.shape}")
    return float(sum(kl_divergence(p_row, q_row)
                     for p_row, q_row in zip(targets, q)))


def _group_means(reps: np.ndarray, masks: dict[str, np.ndarray]
                 ) -> dict[str, np.ndarray | None]:
    return {name: (reps[mask].mean(axis=0) if mask.any() else None)
            for name, mask in masks.items()}


def _partition_masks(provenance: np.ndarray, verdicts: np.ndarray) -> dict[str, np.ndarray]:
    noisy = np.asarray(verdicts).astype(bool)
    orig = provenance == PROV_ORIGINAL
    return {
        "orig_noisy": orig & noisy,
        "corr_noisy": ~orig & noisy,
        "orig_clean": orig & ~noisy,
        "corr_clean": ~orig & ~noisy,
    }


def alignment_loss(reps: np.ndarray, provenance: np.ndarray,
                   verdicts: np.ndarray) -> float:
    """Half the summed cosine discrepancy between original and corrupted mean
    representations within each predicted cluster. A term whose partitions are
    empty is dropped; the 1/2 weighting stays on whatever survives."""
    if len(reps) == 0:
        raise DegenerateClusterError("alignment loss undefined for empty input")
    means = _group_means(reps, _partition_masks(provenance, verdicts))
    total = 0.0
    for side in ("noisy", "clean"):
        a, b = means[f"orig_{side}"], means[f"corr_{side}"]
        if a is not None and b is not None:
            total += cosine_distance(a, b)
    return 0.5 * total


def validation_metric(q_noisy: np.ndarray, provenance: np.ndarray,
                      verdicts: np.ndarray) -> float | None:
    """Squared gap between the mean noisy-assignment of corrupted rows
    predicted noisy and of original rows predicted clean. Returns None when
    either anchor partition is empty (treated as -inf in model selection)."""
    masks = _partition_masks(provenance, verdicts)
    anchor_noisy = masks["corr_noisy"]
    anchor_clean = masks["orig_clean"]
    if not anchor_noisy.any() or not anchor_clean.any():
        return None
    gap = float(q_noisy[anchor_noisy].mean() - q_noisy[anchor_clean].mean())
    return gap * gap


# ---- differentiable counterparts used inside fit ----------------------------


def _norm_t(v: Tensor) -> Tensor:
    return (v * v).sum(axis=1, keepdims=True).sqrt()


def _assign_noisy_t(z: Tensor, mu_noisy: Tensor, mu_clean: Tensor) -> Tensor:
    """q_noisy as a (B, 1) graph node."""
    norm_z = _norm_t(z)
    inv_n = 1.0 / (2.0 - ((z * mu_noisy).sum(axis=1, keepdims=True)
                          / (norm_z * _norm_t(mu_noisy))))
    inv_c = 1.0 / (2.0 - ((z * mu_clean).sum(axis=1, keepdims=True)
                          / (norm_z * _norm_t(mu_clean))))
    return inv_n / (inv_n + inv_c)


def _cluster_loss_t(targets: np.ndarray, q_noisy: Tensor) -> Tensor:
    """Sum of KL(target || q) rows; targets are constants."""
    p_n = targets[:, 0:1]
    p_c = targets[:, 1:2]
    const = float((p_n * np.log(p_n) + p_c * np.log(p_c)).sum())
    q_c = 1.0 - q_noisy
    return const - (Tensor(p_n) * q_noisy.log()).sum() - (Tensor(p_c) * q_c.log()).sum()


def _cosine_distance_t(a: Tensor, b: Tensor) -> Tensor:
    return 1.0 - (a * b).sum() / ((a * a).sum().sqrt() * (b * b).sum().sqrt())


def _alignment_loss_t(z: Tensor, provenance: np.ndarray,
                      verdicts: np.ndarray) -> Tensor | None:
    """Differentiable alignment loss; returns None when both terms are dropped.
    The verdict partition itself is a constant for the gradient."""
    masks = _partition_masks(provenance, verdicts)
    means: dict[str, Tensor | None] = {}
    for name, mask in masks.items():
        if mask.any():
            col = Tensor(mask.astype(np.float64)[:, None])
            means[name] = (z * col).sum(axis=0, keepdims=True) * (1.0 / mask.sum())
        else:
            means[name] = None
    terms = []
    for side in ("noisy", "clean"):
        a, b = means[f"orig_{side}"], means[f"corr_{side}"]
        if a is not None and b is not None:
            terms.append(_cosine_distance_t(a, b))
    if not terms:
        return None
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total * 0.5


# ---- fitting and detection ---------------------------------------------------


def _input_rows(dyn: DynamicsMatrix, cfg: EncoderConfig) -> np.ndarray:
    if cfg.quantize_input and dyn.signal == "logit-difference":
        return quantize(dyn).values
    return dyn.values


def fit(dyn: DynamicsMatrix, cfg: EncoderConfig) -> tuple[ClusterModel, FitTrace]:
    """Cluster the trajectories and return the model snapshot from the epoch
    with the best validation metric (ties resolve to the earliest epoch)."""
    cfg.validate()
    rows = _input_rows(dyn, cfg)
    prov = dyn.provenance
    orig_mask = prov == PROV_ORIGINAL
    corr_mask = prov == PROV_CORRUPTED
    rng = np.random.default_rng(cfg.seed)
    encoder = DynamicsEncoder(cfg, rows.shape[1], rng)

    reps = encoder.encode(rows)
    mu_clean_init, mu_noisy_init = init_centroids(reps[orig_mask], reps[corr_mask])
    model = ClusterModel(
        encoder=encoder,
        mu_noisy=Tensor(mu_noisy_init[None, :].copy(), requires_grad=True),
        mu_clean=Tensor(mu_clean_init[None, :].copy(), requires_grad=True),
        config=cfg,
    )
    for p in encoder.params:
        p.requires_grad = True
    opt = Adam(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps,
               cfg.weight_decay)

    n_rows = rows.shape[0]
    trace = FitTrace()
    best_state: list[np.ndarray] | None = None
    best_key = -np.inf
    best_epoch: int | None = None

    for epoch in range(1, cfg.epochs + 1):
        # freeze sharpened full-set targets at the top of the epoch
        q_noisy_full, q_clean_full = assign(encoder.encode(rows), model)
        targets = target_distribution(np.column_stack([q_noisy_full, q_clean_full]))

        alignment_seen = False
        order = rng.permutation(n_rows)
        for start in range(0, n_rows, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            z = encoder(Tensor(rows[idx][:, None, :]))
            q_noisy_t = _assign_noisy_t(z, model.mu_noisy, model.mu_clean)
            loss = _cluster_loss_t(targets[idx], q_noisy_t)
            batch_verdicts = q_noisy_t.data[:, 0] > 0.5
            if cfg.alpha > 0.0:
                align = _alignment_loss_t(z, prov[idx], batch_verdicts)
                if align is not None:
                    alignment_seen = True
                    loss = loss + cfg.alpha * align
            opt.zero_grad()
            loss.backward()
            opt.step()
        if cfg.alpha > 0.0 and not alignment_seen:
            raise DegenerateClusterError(
                f"alignment loss undefined for every batch of epoch {epoch}")

        # epoch-end evaluation with current parameters
        reps = encoder.encode(rows)
        q_noisy_full, q_clean_full = assign(reps, model)
        verdicts_full = q_noisy_full > 0.5
        metric = validation_metric(q_noisy_full, prov, verdicts_full)
        trace.metrics.append(metric)
        trace.cluster_losses.append(
            cluster_loss(targets, np.column_stack([q_noisy_full, q_clean_full])))
        trace.alignment_losses.append(alignment_loss(reps, prov, verdicts_full))
        trace.original_verdicts.append(verdicts_full[orig_mask].copy())
        trace.corrupted_verdicts.append(verdicts_full[corr_mask].copy())

        key = -np.inf if metric is None else metric
        if best_state is None or key > best_key:
            best_state = model.state()
            best_key = key
            best_epoch = epoch

    model.load_state(best_state)
    model.selected_epoch = best_epoch
    return model, trace


def detect(dyn: DynamicsMatrix, model: ClusterModel,
           trace: FitTrace | None = None, seed: int | None = None,
           method: str = "dynacor") -> DetectionReport:
    """Verdicts for original-provenance rows only; corrupted companions are
    excluded from the report body. Precision/recall/F1 are filled in when the
    dynamics matrix carries truth flags."""
    rows = _input_rows(dyn, model.config)
    q_noisy, _ = assign(model.encode(rows), model)
    flags = q_noisy > 0.5
    orig = dyn.original_mask

    report = DetectionReport(
        method=method,
        seed=seed if seed is not None else model.config.seed,
        selected_epoch=model.selected_epoch,
        metric_trajectory=list(trace.metrics) if trace is not None else [],
        verdicts=[{"id": int(i), "noisy": bool(f)}
                  for i, f in zip(dyn.ids[orig], flags[orig])],
    )
    if dyn.is_noisy is not None:
        scores = binary_scores(flags[orig], dyn.is_noisy[orig].astype(bool))
        report.precision, report.recall, report.f1 = scores
    return report


# ---- checkpoint serialization -------------------------------------------------


def _param_blocks(model: ClusterModel) -> list[Tensor]:
    return model.params  # conv1 W/b, conv2 W/b, conv3 W/b, head W/b, mu_noisy, mu_clean


def save_model(model: ClusterModel, path: str | Path) -> None:
    """Binary checkpoint: magic bytes, then little-endian float64 parameter
    blocks in declaration order, centroids last. Config and selected epoch go
    to a JSON sidecar at `<path>.json`."""
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        for p in _param_blocks(model):
            fh.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())
    sidecar = {
        "config": asdict(model.config),
        "selected_epoch": model.selected_epoch,
        "trajectory_length": model.encoder.trajectory_length,
    }
    with Path(str(path) + ".json").open("w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str | Path) -> ClusterModel:
    path = Path(path)
    sidecar_path = Path(str(path) + ".json")
    if not sidecar_path.exists():
        raise ParseError(f"missing checkpoint sidecar {sidecar_path.name}")
    with sidecar_path.open() as fh:
        sidecar = json.load(fh)
    raw_cfg = sidecar["config"]
    for key in ("channels", "kernels", "hidden"):
        if key in raw_cfg and raw_cfg[key] is not None:
            raw_cfg[key] = tuple(raw_cfg[key])
    cfg = EncoderConfig(**raw_cfg)

    blob = path.read_bytes()
    if not blob.startswith(CHECKPOINT_MAGIC):
        raise ParseError("bad checkpoint magic; not a model file")
    flat = np.frombuffer(blob[len(CHECKPOINT_MAGIC):], dtype="<f8")

    rng = np.random.default_rng(cfg.seed)
    encoder = DynamicsEncoder(cfg, sidecar["trajectory_length"], rng)
    model = ClusterModel(
        encoder=encoder,
        mu_noisy=Tensor(np.zeros((1, cfg.rep_dim)), requires_grad=True),
        mu_clean=Tensor(np.zeros((1, cfg.rep_dim)), requires_grad=True),
        config=cfg,
        selected_epoch=sidecar["selected_epoch"],
    )
    offset = 0
    for p in _param_blocks(model):
        size = p.data.size
        if offset + size > flat.size:
            raise ParseError("checkpoint truncated")
        p.data = flat[offset:offset + size].reshape(p.data.shape).astype(np.float64)
        offset += size
    if offset != flat.size:
        raise ParseError("checkpoint has trailing bytes")
    return model
