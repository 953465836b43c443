import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynacor.errors import InvalidDistributionError, InvalidLabelError, NumericFaultError
from dynacor.nn import (Adam, Conv1d, Dense, Mlp, SgdMomentum, Tensor,
                        cross_entropy_batch, grad_check, kl_divergence,
                        softmax, softmax_cross_entropy)


def test_dense_identity_passthrough():
    rng = np.random.default_rng(0)
    layer = Dense(2, 2, rng)
    layer.weight.data = np.eye(2)
    layer.bias.data = np.zeros(2)
    out = layer(Tensor(np.array([[1.0, 2.0]])))
    np.testing.assert_array_equal(out.data, [[1.0, 2.0]])


def test_rectifier_definition():
    out = Tensor(np.array([-1.0, 0.0, 2.0])).relu()
    np.testing.assert_array_equal(out.data, [0.0, 0.0, 2.0])


def test_conv1d_sliding_sum():
    rng = np.random.default_rng(0)
    conv = Conv1d(1, 1, 3, rng)
    conv.weight.data = np.ones((1, 1, 3))
    conv.bias.data = np.zeros(1)
    out = conv(Tensor(np.ones((1, 1, 4))))
    np.testing.assert_array_equal(out.data, [[[3.0, 3.0]]])


def test_conv1d_output_length():
    rng = np.random.default_rng(1)
    conv = Conv1d(2, 4, 5, rng)
    out = conv(Tensor(rng.normal(size=(3, 2, 11))))
    assert out.data.shape == (3, 4, 7)


def test_dense_shape_mismatch():
    from dynacor.errors import InvalidShapeError
    rng = np.random.default_rng(0)
    layer = Dense(3, 2, rng)
    with pytest.raises(InvalidShapeError):
        layer(Tensor(np.zeros((1, 4))))


def test_cross_entropy_uniform_logits():
    loss, grad = softmax_cross_entropy(np.array([0.0, 0.0]), 0)
    assert loss == pytest.approx(np.log(2.0), abs=1e-12)
    np.testing.assert_allclose(grad, [-0.5, 0.5], atol=1e-12)


def test_cross_entropy_saturated():
    loss, _ = softmax_cross_entropy(np.array([10.0, -10.0]), 0)
    assert loss == pytest.approx(0.0, abs=1e-8)


def test_cross_entropy_label_out_of_range():
    with pytest.raises(InvalidLabelError):
        softmax_cross_entropy(np.array([0.0, 0.0]), 2)


def test_cross_entropy_gradient_matches_finite_differences():
    rng = np.random.default_rng(42)
    for _ in range(20):
        logits = rng.normal(size=5)
        label = int(rng.integers(0, 5))
        _, grad = softmax_cross_entropy(logits, label)
        h = 1e-6
        for i in range(5):
            up, down = logits.copy(), logits.copy()
            up[i] += h
            down[i] -= h
            numeric = (softmax_cross_entropy(up, label)[0]
                       - softmax_cross_entropy(down, label)[0]) / (2 * h)
            assert abs(grad[i] - numeric) / max(1.0, abs(numeric)) < 1e-5


def test_softmax_normalized_and_positive():
    rng = np.random.default_rng(3)
    probs = softmax(rng.normal(scale=20, size=(50, 7)))
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    assert (probs > 0).all()


def test_kl_identity_is_zero():
    assert kl_divergence((0.3, 0.7), (0.3, 0.7)) == 0.0


def test_kl_point_mass():
    assert kl_divergence((1.0, 0.0), (0.5, 0.5)) == pytest.approx(np.log(2.0))


def test_kl_rejects_unnormalized():
    with pytest.raises(InvalidDistributionError):
        kl_divergence((0.5, 0.6), (0.5, 0.5))


@given(st.floats(1e-6, 1 - 1e-6), st.floats(1e-6, 1 - 1e-6))
def test_kl_nonnegative_and_zero_iff_equal(p, q):
    value = kl_divergence((p, 1 - p), (q, 1 - q))
    assert value >= 0.0
    if abs(p - q) > 1e-9:
        assert value > 0.0


def test_adam_zero_gradient_fixed_point():
    theta = Tensor(np.array([1.5, -2.0]), requires_grad=True)
    opt = Adam([theta], learning_rate=0.1)
    theta.grad = np.zeros(2)
    opt.step()
    np.testing.assert_array_equal(theta.data, [1.5, -2.0])


def test_sgd_single_step():
    theta = Tensor(np.array([1.0]), requires_grad=True)
    opt = SgdMomentum([theta], learning_rate=0.1, momentum=0.0)
    theta.grad = np.array([1.0])
    opt.step()
    np.testing.assert_allclose(theta.data, [0.9])


def test_adam_converges_on_quadratic():
    theta = Tensor(np.array([3.0]), requires_grad=True)
    opt = Adam([theta], learning_rate=0.1)
    for _ in range(200):
        opt.zero_grad()
        (theta * theta).sum().backward()
        opt.step()
    assert abs(float(theta.data[0])) < 0.01


def test_optimizer_rejects_nan_gradients():
    theta = Tensor(np.array([1.0]), requires_grad=True)
    opt = Adam([theta], learning_rate=0.1)
    theta.grad = np.array([np.nan])
    with pytest.raises(NumericFaultError):
        opt.step()
    np.testing.assert_array_equal(theta.data, [1.0])  # step aborted untouched


def test_sgd_weight_decay_and_momentum_recurrence():
    theta = Tensor(np.array([2.0]), requires_grad=True)
    opt = SgdMomentum([theta], learning_rate=0.1, momentum=0.5, weight_decay=0.1)
    theta.grad = np.array([1.0])
    opt.step()
    # v = 1 + 0.1*2 = 1.2; theta = 2 - 0.12
    np.testing.assert_allclose(theta.data, [1.88])
    theta.grad = np.array([0.0])
    opt.step()
    # v = 0.5*1.2 + 0.1*1.88 = 0.788; theta = 1.88 - 0.0788
    np.testing.assert_allclose(theta.data, [1.8012])


def test_grad_check_scalar_square():
    x = Tensor(np.array([3.0]), requires_grad=True)
    result = grad_check(lambda: (x * x).sum(), [x], tolerance=1e-6)
    assert result.passed
    x.zero_grad()
    (x * x).sum().backward()
    assert x.grad[0] == pytest.approx(6.0, abs=1e-9)


def test_grad_check_dense_rectifier_cross_entropy():
    rng = np.random.default_rng(10)
    mlp = Mlp([4, 6, 3], rng)
    x = rng.normal(size=(5, 4))
    y = rng.integers(0, 3, size=5)
    result = grad_check(lambda: cross_entropy_batch(mlp(Tensor(x)), y), mlp.params)
    assert result.passed, result.max_rel_error


def test_grad_check_conv_dense_head():
    rng = np.random.default_rng(11)
    conv = Conv1d(1, 3, 3, rng)
    head = Dense(3, 2, rng)
    x = rng.normal(size=(4, 1, 10))
    y = rng.integers(0, 2, size=4)

    def loss():
        hidden = conv(Tensor(x)).relu().mean(axis=2)
        return cross_entropy_batch(head(hidden), y)

    result = grad_check(loss, conv.params + head.params)
    assert result.passed, result.max_rel_error


def test_weighted_cross_entropy_scales_gradients():
    rng = np.random.default_rng(12)
    logits = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    labels = np.array([0, 1, 2])
    weights = np.array([2.0, 0.5, 1.0])
    loss = cross_entropy_batch(logits, labels, weights)
    loss.backward()
    probs = softmax(logits.data)
    probs[np.arange(3), labels] -= 1.0
    np.testing.assert_allclose(logits.grad, probs * weights[:, None], atol=1e-12)


def test_forward_deterministic():
    rng = np.random.default_rng(13)
    mlp = Mlp([4, 8, 2], rng)
    x = rng.normal(size=(10, 4))
    np.testing.assert_array_equal(mlp.logits(x), mlp.logits(x))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_circuits_pass_grad_check(seed):
    rng = np.random.default_rng(seed)
    mlp = Mlp([3, 4, 2], rng)
    x = rng.normal(size=(4, 3))
    y = rng.integers(0, 2, size=4)
    result = grad_check(lambda: cross_entropy_batch(mlp(Tensor(x)), y), mlp.params)
    assert result.passed, result.max_rel_error
