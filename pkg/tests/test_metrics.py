import numpy as np
import pytest

from dynacor.errors import (DegenerateSeparationError, IdMismatchError,
                            UndefinedBaselineError)
from dynacor.metrics import binary_scores, dbi, f1, flag_all_baseline, opt_epoch
from dynacor.report import DetectionReport


def test_f1_counting_example():
    predicted = {"a": False, "b": True, "c": True}
    truth = {"a": True, "b": True, "c": False}
    precision, recall, score = f1(predicted, truth)
    assert precision == 0.5
    assert recall == 0.5
    assert score == 0.5


def test_f1_perfect_prediction():
    verdicts = {1: True, 2: False, 3: True}
    assert f1(verdicts, verdicts) == (1.0, 1.0, 1.0)


def test_f1_edge_conventions():
    nothing = {1: False, 2: False}
    assert f1(nothing, nothing)[2] == 1.0  # no positives anywhere
    assert f1(nothing, {1: True, 2: False})[2] == 0.0  # missed positives


def test_f1_id_mismatch():
    with pytest.raises(IdMismatchError):
        f1({1: True}, {2: True})


def test_f1_order_invariant():
    predicted = {1: True, 2: False, 3: True, 4: False}
    truth = {4: True, 3: True, 2: False, 1: False}
    assert f1(predicted, truth) == f1(dict(reversed(predicted.items())), truth)


def test_flag_all_formula():
    assert flag_all_baseline(0.3) == pytest.approx(0.4615, abs=5e-5)
    assert flag_all_baseline(1.0) == 1.0


def test_flag_all_undefined_at_zero():
    with pytest.raises(UndefinedBaselineError):
        flag_all_baseline(0.0)


def test_flag_all_matches_all_positive_predictor():
    rng = np.random.default_rng(0)
    for rate in (0.1, 0.3, 0.6):
        truth = rng.random(5000) < rate
        empirical_rate = truth.mean()
        _, _, score = binary_scores(np.ones(5000, dtype=bool), truth)
        assert score == pytest.approx(flag_all_baseline(empirical_rate), abs=1e-12)


# ---- DBI ---------------------------------------------------------------------


def test_dbi_singleton_clusters():
    reps = np.array([[0.0, 0.0], [10.0, 0.0]])
    assert dbi(reps, np.array([0, 1])) == 0.0


def test_dbi_scale_and_translation_invariance():
    rng = np.random.default_rng(1)
    reps = np.vstack([rng.normal(0, 1, (30, 3)), rng.normal(6, 1, (30, 3))])
    labels = np.array([0] * 30 + [1] * 30)
    base = dbi(reps, labels)
    assert dbi(2.0 * reps, labels) == pytest.approx(base, rel=1e-12)
    assert dbi(reps + 100.0, labels) == pytest.approx(base, rel=1e-9)


def test_dbi_shrinks_with_separation():
    rng = np.random.default_rng(2)
    spreads = []
    for distance in (5.0, 10.0, 20.0):
        reps = np.vstack([rng.normal(0, 1, (50, 4)),
                          rng.normal(0, 1, (50, 4)) + distance])
        spreads.append(dbi(reps, np.array([0] * 50 + [1] * 50)))
    assert spreads[0] > spreads[1] > spreads[2]


def test_dbi_requires_two_clusters():
    reps = np.zeros((4, 2))
    with pytest.raises(DegenerateSeparationError):
        dbi(reps, np.array([0, 0, 0, 0]))


def test_dbi_coincident_centroids():
    reps = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    with pytest.raises(DegenerateSeparationError):
        dbi(reps, np.array([0, 0, 1, 1]))


# ---- opt epoch ------------------------------------------------------------------


def _verdicts(flags):
    return {i: bool(v) for i, v in enumerate(flags)}


def test_opt_epoch_argmax():
    truth = _verdicts([1, 1, 0, 0])
    trajectory = [_verdicts([0, 0, 0, 0]),   # f1 0
                  _verdicts([1, 1, 0, 0]),   # f1 1
                  _verdicts([1, 0, 0, 0])]   # f1 2/3
    epoch, best = opt_epoch(trajectory, truth)
    assert epoch == 2
    assert best == 1.0


def test_opt_epoch_tie_earliest():
    truth = _verdicts([1, 0])
    trajectory = [_verdicts([1, 0])] * 3
    assert opt_epoch(trajectory, truth) == (1, 1.0)


def test_opt_epoch_upper_bounds_trajectory():
    rng = np.random.default_rng(3)
    truth = _verdicts(rng.integers(0, 2, 30))
    trajectory = [_verdicts(rng.integers(0, 2, 30)) for _ in range(6)]
    _, best = opt_epoch(trajectory, truth)
    for verdicts in trajectory:
        assert f1(verdicts, truth)[2] <= best


# ---- report serialization ---------------------------------------------------------


def test_report_round_trip(tmp_path):
    report = DetectionReport(
        method="dynacor", seed=7, selected_epoch=3,
        metric_trajectory=[0.01, None, 0.2],
        precision=0.9, recall=0.8, f1=0.8470588235294118,
        verdicts=[{"id": 0, "noisy": True}, {"id": 1, "noisy": False}],
    )
    path = tmp_path / "report.json"
    report.write_json(path)
    back = DetectionReport.from_json(path)
    assert back.to_dict() == report.to_dict()
    assert back.verdict_map() == {0: True, 1: False}
    assert back.flagged_ids() == [0]
