import numpy as np
import pytest

from dynacor.corruption import CorruptionConfig, corrupt, pool
from dynacor.data import (NoiseSpec, inject_noise, make_blobs,
                          measured_noise_rate, read_dataset_csv,
                          write_dataset_csv)
from dynacor.errors import (EmptyCorruptionError, IncompatibleDatasetsError,
                            InvalidCorruptionConfigError)

CHI2_99_DOF15 = 30.578  # critical value, 4 classes x (4-1 targets - 1) dof... see test


def test_corrupt_exact_count():
    ds = make_blobs(4, 250, 4, seed=0)
    out = corrupt(ds, CorruptionConfig(gamma=0.1, seed=1))
    assert len(out) == 100
    assert (out.provenance == "corr").all()


def test_two_classes_force_opposite_label():
    ds = make_blobs(2, 100, 4, seed=1)
    out = corrupt(ds, CorruptionConfig(gamma=0.5, seed=2))
    src_label = {int(i): int(l) for i, l in zip(ds.ids, ds.labels)}
    for new_label, src in zip(out.labels, out.source_ids):
        assert int(new_label) == 1 - src_label[int(src)]


def test_corrupted_label_always_differs_from_source():
    ds = make_blobs(5, 200, 4, seed=2)
    noisy = inject_noise(ds, NoiseSpec("symmetric", 0.3, seed=3))
    out = corrupt(noisy, CorruptionConfig(gamma=1.0, seed=4))
    src_label = {int(i): int(l) for i, l in zip(noisy.ids, noisy.labels)}
    assert all(int(l) != src_label[int(s)]
               for l, s in zip(out.labels, out.source_ids))


def test_zero_jitter_copies_features_exactly():
    ds = make_blobs(3, 50, 4, seed=3)
    out = corrupt(ds, CorruptionConfig(gamma=0.2, jitter=0.0, seed=5))
    src_row = {int(i): ds.features[k] for k, i in enumerate(ds.ids)}
    for row, src in zip(out.features, out.source_ids):
        np.testing.assert_array_equal(row, src_row[int(src)])


def test_jitter_scales_with_feature_std():
    ds = make_blobs(3, 400, 4, seed=4)
    out = corrupt(ds, CorruptionConfig(gamma=1.0, jitter=0.05, seed=6))
    src_rows = np.array([ds.features[np.where(ds.ids == s)[0][0]]
                         for s in out.source_ids])
    deltas = out.features - src_rows
    ratio = deltas.std(axis=0) / ds.features.std(axis=0)
    np.testing.assert_allclose(ratio, 0.05, rtol=0.2)


def test_corrupted_rate_matches_formula():
    # Monte-Carlo check of 1 - eta/(C-1) on a full corruption pass
    ds = make_blobs(10, 2000, 4, seed=5)
    noisy = inject_noise(ds, NoiseSpec("symmetric", 0.3, seed=7))
    out = corrupt(noisy, CorruptionConfig(gamma=1.0, jitter=0.0, seed=8))
    expected = 1 - 0.3 / 9
    assert abs(measured_noise_rate(out) - expected) < 0.005


def test_corrupted_labels_uniform_over_remaining_classes():
    classes = 5
    ds = make_blobs(classes, 4000, 4, seed=6)
    out = corrupt(ds, CorruptionConfig(gamma=1.0, jitter=0.0, seed=9))
    src_label = np.array([ds.labels[np.where(ds.ids == s)[0][0]]
                          for s in out.source_ids])
    # chi-squared uniformity per source class, pooled:
    # dof = classes * (classes - 2) = 15, critical value at 0.01 is 30.578
    chi2 = 0.0
    for source_class in range(classes):
        counts = np.bincount(out.labels[src_label == source_class],
                             minlength=classes).astype(float)
        counts = np.delete(counts, source_class)
        expected = counts.sum() / (classes - 1)
        chi2 += float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < CHI2_99_DOF15


def test_empty_corruption_rejected():
    ds = make_blobs(2, 2, 2, seed=7)
    with pytest.raises(EmptyCorruptionError):
        corrupt(ds, CorruptionConfig(gamma=0.1, seed=1))


def test_gamma_range_validated():
    ds = make_blobs(2, 10, 2, seed=8)
    for gamma in (0.0, 1.5, -0.2):
        with pytest.raises(InvalidCorruptionConfigError):
            corrupt(ds, CorruptionConfig(gamma=gamma, seed=1))


def test_corrupt_deterministic():
    ds = make_blobs(4, 100, 4, seed=9)
    cfg = CorruptionConfig(gamma=0.3, seed=10)
    a, b = corrupt(ds, cfg), corrupt(ds, cfg)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_array_equal(a.source_ids, b.source_ids)


# ---- pooling ----------------------------------------------------------------


def test_pool_sizes_and_order():
    ds = make_blobs(3, 10, 4, seed=10)
    out = corrupt(ds, CorruptionConfig(gamma=0.1, seed=11))
    pooled = pool(ds, out)
    assert len(pooled) == 33
    assert (pooled.provenance[:30] == "orig").all()
    assert (pooled.provenance[30:] == "corr").all()
    np.testing.assert_array_equal(pooled.ids[:30], ds.ids)


def test_pool_provenance_counts_preserved():
    rng = np.random.default_rng(0)
    for _ in range(10):
        n, gamma = int(rng.integers(20, 200)), float(rng.uniform(0.05, 1.0))
        ds = make_blobs(4, n, 3, seed=int(rng.integers(1 << 30)))
        out = corrupt(ds, CorruptionConfig(gamma=gamma, seed=int(rng.integers(1 << 30))))
        pooled = pool(ds, out)
        assert int((pooled.provenance == "orig").sum()) == len(ds)
        assert int((pooled.provenance == "corr").sum()) == len(out)


def test_pool_rejects_dimension_mismatch():
    a = make_blobs(3, 10, 4, seed=11)
    b = make_blobs(3, 10, 5, seed=12)
    with pytest.raises(IncompatibleDatasetsError):
        pool(a, b)


def test_pool_rejects_overlapping_ids():
    a = make_blobs(3, 10, 4, seed=13)
    with pytest.raises(IncompatibleDatasetsError):
        pool(a, a)


def test_corrupted_csv_round_trip_with_source_ids(tmp_path):
    ds = make_blobs(4, 50, 4, seed=14)
    out = corrupt(ds, CorruptionConfig(gamma=0.2, seed=15))
    path = tmp_path / "corr.csv"
    write_dataset_csv(out, path)
    back = read_dataset_csv(path, num_classes=4)
    np.testing.assert_array_equal(back.source_ids, out.source_ids)
    np.testing.assert_array_equal(back.features, out.features)
    np.testing.assert_array_equal(back.provenance, out.provenance)
