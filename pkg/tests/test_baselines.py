import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynacor.baselines import aum_detect, avg_encoder_detect, gmm1d_em
from dynacor.errors import DegenerateDataError, InvalidSignalError
from dynacor.trainer import DynamicsMatrix, summarize


def dynamics_from_rows(values, provenance=None, signal="logit-difference"):
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if provenance is None:
        provenance = np.array(["orig"] * n, dtype="<U4")
    return DynamicsMatrix(values=values, ids=np.arange(n, dtype=np.int64),
                          provenance=np.asarray(provenance, dtype="<U4"),
                          observed_labels=np.zeros(n, dtype=np.int64),
                          signal=signal)


# ---- EM ----------------------------------------------------------------------


def test_em_separated_clusters():
    params = gmm1d_em(np.array([0.0, 0.0, 0.0, 10.0, 10.0, 10.0]))
    assert abs(sorted(params.means)[0] - 0.0) < 0.1
    assert abs(sorted(params.means)[1] - 10.0) < 0.1
    assert params.responsibilities.max(axis=1).min() > 0.99


def test_em_symmetric_modes():
    rng = np.random.default_rng(0)
    values = np.concatenate([rng.normal(-5, 0.5, 300), rng.normal(5, 0.5, 300)])
    params = gmm1d_em(values)
    means = np.sort(params.means)
    assert abs(means[0] + 5.0) < 0.2
    assert abs(means[1] - 5.0) < 0.2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_em_log_likelihood_non_decreasing(seed):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=60) * rng.uniform(0.5, 3) + rng.uniform(-2, 2)
    params = gmm1d_em(values)
    diffs = np.diff(params.log_likelihoods)
    assert (diffs >= -1e-9).all()


def test_em_rejects_identical_values():
    with pytest.raises(DegenerateDataError):
        gmm1d_em(np.zeros(10))


def test_em_weights_and_variances_valid():
    rng = np.random.default_rng(1)
    params = gmm1d_em(rng.normal(size=100))
    assert params.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert (params.variances >= 1e-9).all()


# ---- Avg.Encoder ----------------------------------------------------------------


def test_avg_encoder_flags_low_rows():
    values = np.vstack([np.ones((30, 8)), -np.ones((10, 8))])
    dyn = dynamics_from_rows(values)
    ids, flags = avg_encoder_detect(dyn)
    np.testing.assert_array_equal(flags[:30], False)
    np.testing.assert_array_equal(flags[30:], True)
    np.testing.assert_array_equal(ids, dyn.ids)


def test_avg_encoder_identical_rows_degenerate():
    dyn = dynamics_from_rows(np.ones((20, 5)))
    with pytest.raises(DegenerateDataError):
        avg_encoder_detect(dyn)


def test_avg_encoder_requires_logit_difference():
    dyn = dynamics_from_rows(np.sign(np.random.default_rng(0).normal(size=(10, 4))),
                             signal="quantized-logit-difference")
    with pytest.raises(InvalidSignalError):
        avg_encoder_detect(dyn)


def test_avg_encoder_permutation_invariant():
    rng = np.random.default_rng(2)
    values = np.vstack([rng.normal(2, 0.3, (25, 6)), rng.normal(-2, 0.3, (15, 6))])
    dyn = dynamics_from_rows(values)
    ids, flags = avg_encoder_detect(dyn)
    perm = rng.permutation(len(values))
    shuffled = dynamics_from_rows(values[perm])
    shuffled = DynamicsMatrix(values=shuffled.values, ids=dyn.ids[perm],
                              provenance=shuffled.provenance,
                              observed_labels=shuffled.observed_labels,
                              signal="logit-difference")
    ids2, flags2 = avg_encoder_detect(shuffled)
    original = dict(zip(ids.tolist(), flags.tolist()))
    assert dict(zip(ids2.tolist(), flags2.tolist())) == original


def test_avg_encoder_ignores_corrupted_rows():
    values = np.vstack([np.ones((20, 5)), -np.ones((8, 5)),
                        np.full((6, 5), 50.0)])
    prov = ["orig"] * 28 + ["corr"] * 6
    ids, flags = avg_encoder_detect(dynamics_from_rows(values, prov))
    assert len(ids) == 28
    np.testing.assert_array_equal(flags[20:], True)


# ---- AUM --------------------------------------------------------------------------


def test_aum_score_is_row_sum():
    values = np.full((5, 10), 2.0)
    values[0] = -2.0
    dyn = dynamics_from_rows(values)
    assert dyn.values[1].sum() == 20.0
    ids, flags = aum_detect(dyn)
    np.testing.assert_array_equal(flags, [True, False, False, False, False])


def test_aum_scores_equal_epochs_times_summary():
    rng = np.random.default_rng(3)
    values = rng.normal(size=(30, 7))
    dyn = dynamics_from_rows(values)
    np.testing.assert_allclose(values.sum(axis=1), 7 * summarize(dyn), atol=1e-12)


def test_aum_crisp_clusters():
    rng = np.random.default_rng(4)
    values = np.vstack([rng.normal(2, 0.1, (40, 10)), rng.normal(-2, 0.1, (12, 10))])
    dyn = dynamics_from_rows(values)
    _, flags = aum_detect(dyn)
    np.testing.assert_array_equal(flags[:40], False)
    np.testing.assert_array_equal(flags[40:], True)


def test_aum_agrees_with_avg_encoder_on_shared_mixture():
    # identical split machinery: summed scores are scaled averages
    rng = np.random.default_rng(5)
    values = np.vstack([rng.normal(1.5, 0.4, (30, 6)), rng.normal(-1.5, 0.4, (20, 6))])
    dyn = dynamics_from_rows(values)
    _, avg_flags = avg_encoder_detect(dyn)
    _, aum_flags = aum_detect(dyn)
    np.testing.assert_array_equal(avg_flags, aum_flags)
