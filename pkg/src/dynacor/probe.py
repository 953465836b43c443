"""Supervised probe: how separable are the trajectories when truth is known?

A binary classifier (the same conv encoder with a 2-way dense head) is
trained on (trajectory -> noisy/clean) with a 70/15/15 split; the reported
score is the test F1 at the epoch with the best validation F1. Training on
the epoch-mean scalar instead of the full trajectory uses a two-hidden-layer
MLP, since a single scalar leaves nothing for convolutions to slide over.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import DynamicsEncoder, EncoderConfig
from .errors import MissingTruthError, SplitDegenerateError
from .metrics import binary_scores
from .nn import Adam, Dense, Mlp, Tensor, cross_entropy_batch
from .trainer import DynamicsMatrix, summarize


@dataclass(frozen=True)
class ProbeConfig:
    epochs: int = 20
    batch_size: int = 128
    learning_rate: float = 1e-3
    hidden: tuple[int, ...] = (64, 64)  # summarized-input MLP only
    encoder: EncoderConfig = EncoderConfig()


def _split_indices(n_rows: int, flags: np.ndarray, seed: int
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    for attempt_seed in (seed, seed + 1):
        order = np.random.default_rng(attempt_seed).permutation(n_rows)
        n_train = int(round(0.70 * n_rows))
        n_val = int(round(0.15 * n_rows))
        train = order[:n_train]
        val = order[n_train:n_train + n_val]
        test = order[n_train + n_val:]
        if all(len(np.unique(flags[part])) == 2 for part in (train, val, test)):
            return train, val, test
    raise SplitDegenerateError("could not produce splits containing both classes")


class _TrajectoryNet:
    def __init__(self, cfg: ProbeConfig, length: int, rng: np.random.Generator):
        self.encoder = DynamicsEncoder(cfg.encoder, length, rng)
        self.head = Dense(cfg.encoder.rep_dim, 2, rng)

    @property
    def params(self):
        return self.encoder.params + self.head.params

    def __call__(self, rows: np.ndarray) -> Tensor:
        return self.head(self.encoder(Tensor(rows[:, None, :])))


class _ScalarNet:
    def __init__(self, cfg: ProbeConfig, rng: np.random.Generator):
        self.mlp = Mlp([1, *cfg.hidden, 2], rng)

    @property
    def params(self):
        return self.mlp.params

    def __call__(self, rows: np.ndarray) -> Tensor:
        return self.mlp(Tensor(rows))


def supervised_probe(dyn: DynamicsMatrix, split_seed: int,
                     summarized: bool = False,
                     cfg: ProbeConfig = ProbeConfig()) -> float:
    """Test F1 of the supervised noisy/clean classifier on held-out rows."""
    if dyn.is_noisy is None:
        raise MissingTruthError("supervised probe needs truth flags on every row")
    flags = dyn.is_noisy.astype(np.int64)
    train, val, test = _split_indices(dyn.n_rows, flags, split_seed)

    rng = np.random.default_rng(split_seed)
    if summarized:
        inputs = summarize(dyn)[:, None]
        net = _ScalarNet(cfg, rng)
    else:
        inputs = dyn.values
        net = _TrajectoryNet(cfg, dyn.n_epochs, rng)
    for p in net.params:
        p.requires_grad = True
    opt = Adam(net.params, cfg.learning_rate)

    def f1_on(idx: np.ndarray) -> float:
        logits = net(inputs[idx]).data
        predicted = logits[:, 1] > logits[:, 0]
        return binary_scores(predicted, flags[idx].astype(bool))[2]

    best_val = -1.0
    test_at_best = 0.0
    for _ in range(cfg.epochs):
        order = rng.permutation(len(train))
        for start in range(0, len(train), cfg.batch_size):
            idx = train[order[start:start + cfg.batch_size]]
            loss = cross_entropy_batch(net(inputs[idx]), flags[idx]) * (1.0 / len(idx))
            opt.zero_grad()
            loss.backward()
            opt.step()
        val_f1 = f1_on(val)
        if val_f1 > best_val:
            best_val = val_f1
            test_at_best = f1_on(test)
    return test_at_best
