import numpy as np
import pytest

from dynacor.encoder import EncoderConfig
from dynacor.errors import MissingTruthError, SplitDegenerateError
from dynacor.metrics import flag_all_baseline
from dynacor.probe import ProbeConfig, supervised_probe
from dynacor.trainer import DynamicsMatrix

# few rows -> few adam steps per epoch, so the small-problem config trades the
# production learning rate for a hotter one
FAST = ProbeConfig(epochs=8, learning_rate=3e-2,
                   encoder=EncoderConfig(channels=(4, 4, 4),
                                         kernels=(3, 3, 3), rep_dim=4))


def make_dynamics(values, is_noisy):
    n = len(values)
    return DynamicsMatrix(values=np.asarray(values, dtype=np.float64),
                          ids=np.arange(n, dtype=np.int64),
                          provenance=np.array(["orig"] * n, dtype="<U4"),
                          observed_labels=np.zeros(n, dtype=np.int64),
                          signal="logit-difference",
                          is_noisy=np.asarray(is_noisy, dtype=np.int8))


def test_probe_perfect_on_separable_rows():
    values = np.vstack([np.ones((300, 12)), -np.ones((120, 12))])
    flags = np.array([0] * 300 + [1] * 120)
    assert supervised_probe(make_dynamics(values, flags), 0, cfg=FAST) == 1.0


def test_probe_perfect_on_separable_summaries():
    values = np.vstack([np.ones((300, 12)), -np.ones((120, 12))])
    flags = np.array([0] * 300 + [1] * 120)
    score = supervised_probe(make_dynamics(values, flags), 0, summarized=True, cfg=FAST)
    assert score == 1.0


def test_probe_null_signal_shows_no_skill():
    # labels carry no information about the rows: the probe cannot beat the
    # flag-everything strategy by more than noise (it often scores far below,
    # collapsing to the majority class)
    rng = np.random.default_rng(5)
    values = rng.normal(size=(500, 12))
    flags = (rng.random(500) < 0.35).astype(np.int8)
    floor = flag_all_baseline(flags.mean())
    for seed in (0, 1, 2):
        score = supervised_probe(make_dynamics(values, flags), seed, cfg=FAST)
        assert score < floor + 0.1


def test_probe_requires_truth():
    values = np.ones((50, 12))
    dyn = DynamicsMatrix(values=values, ids=np.arange(50, dtype=np.int64),
                         provenance=np.array(["orig"] * 50, dtype="<U4"),
                         observed_labels=np.zeros(50, dtype=np.int64),
                         signal="logit-difference")
    with pytest.raises(MissingTruthError):
        supervised_probe(dyn, 0, cfg=FAST)


def test_probe_degenerate_split():
    # a single noisy row cannot appear in every split
    values = np.vstack([np.ones((40, 12)), -np.ones((1, 12))])
    flags = np.array([0] * 40 + [1])
    with pytest.raises(SplitDegenerateError):
        supervised_probe(make_dynamics(values, flags), 2, cfg=FAST)


def test_probe_deterministic():
    rng = np.random.default_rng(6)
    values = np.vstack([rng.normal(1, 0.5, (150, 12)), rng.normal(-1, 0.5, (60, 12))])
    flags = np.array([0] * 150 + [1] * 60)
    dyn = make_dynamics(values, flags)
    assert supervised_probe(dyn, 3, cfg=FAST) == supervised_probe(dyn, 3, cfg=FAST)
