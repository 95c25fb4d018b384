import math

import numpy as np
import pytest

from wristnet.errors import DimensionError, StateError
from wristnet.nn import (
    LayerKind,
    LayerSpec,
    conv1d_backward,
    conv1d_forward,
    dense_backward,
    dense_forward,
    lstm_backward,
    lstm_forward,
    parameter_count,
)
from wristnet.nn.gradcheck import max_relative_error


def conv_oracle(x, w, b):
    t = x.shape[0]
    k, _, c_out = w.shape
    pad = (k - 1) // 2
    out = np.zeros((t, c_out))
    for s in range(t):
        for j in range(k):
            src = s + j - pad
            if 0 <= src < t:
                out[s] += x[src] @ w[j]
    return out + b


def test_conv1d_identity_kernel(rng):
    x = np.arange(10.0).reshape(10, 1)
    out, cache = conv1d_forward(x, np.ones((1, 1, 1)), np.zeros(1), "linear")
    np.testing.assert_array_equal(out, x)

    grad_out = rng.normal(size=(10, 1))
    gx, gw, gb = conv1d_backward(grad_out, cache)
    np.testing.assert_array_equal(gx, grad_out)
    assert gw[0, 0, 0] == pytest.approx(float(np.sum(x * grad_out)))
    assert gb[0] == pytest.approx(float(np.sum(grad_out)))


def test_conv1d_matches_direct_summation(rng):
    x = rng.normal(size=(12, 2))
    w = rng.normal(size=(3, 2, 4))
    b = rng.normal(size=4)
    out, _ = conv1d_forward(x, w, b, "linear")
    np.testing.assert_allclose(out, conv_oracle(x, w, b), atol=1e-12)


def test_conv1d_even_kernel_same_padding(rng):
    x = rng.normal(size=(450, 3))
    w = rng.normal(size=(8, 3, 16))
    out, _ = conv1d_forward(x, w, np.zeros(16), "linear")
    assert out.shape == (450, 16)
    np.testing.assert_allclose(out, conv_oracle(x, w, np.zeros(16)), atol=1e-10)
    assert parameter_count(LayerSpec(LayerKind.CONV1D, 3, 16, 8)) == 400


def test_conv1d_batched_equals_per_sample(rng):
    x = rng.normal(size=(3, 20, 2))
    w = rng.normal(size=(5, 2, 3))
    b = rng.normal(size=3)
    batched, _ = conv1d_forward(x, w, b, "relu")
    for i in range(3):
        single, _ = conv1d_forward(x[i], w, b, "relu")
        np.testing.assert_allclose(batched[i], single, atol=1e-12)


def test_conv1d_channel_mismatch():
    with pytest.raises(DimensionError):
        conv1d_forward(np.zeros((10, 3)), np.zeros((3, 2, 4)), np.zeros(4))


def test_conv1d_zero_upstream_gradient(rng):
    x = rng.normal(size=(10, 3))
    out, cache = conv1d_forward(x, rng.normal(size=(4, 3, 2)), np.zeros(2), "tanh")
    gx, gw, gb = conv1d_backward(np.zeros_like(out), cache)
    assert not gx.any() and not gw.any() and not gb.any()


def test_backward_without_cache():
    with pytest.raises(StateError):
        conv1d_backward(np.zeros((4, 2)), None)
    with pytest.raises(StateError):
        lstm_backward(np.zeros(3), None)
    with pytest.raises(StateError):
        dense_backward(np.zeros(3), None)


@pytest.mark.parametrize("seed", range(5))
def test_conv1d_gradients(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(2, 10, 3))
    w = 0.3 * rng.normal(size=(8, 3, 4))
    b = 0.1 * rng.normal(size=4)
    proj = rng.normal(size=(2, 10, 4))

    def objective():
        out, _ = conv1d_forward(x, w, b, "tanh")
        return float(np.sum(out * proj))

    _, cache = conv1d_forward(x, w, b, "tanh")
    gx, gw, gb = conv1d_backward(proj, cache)
    for array, analytic in ((w, gw), (b, gb), (x, gx)):
        assert max_relative_error(objective, array, analytic, rng, n_coords=100) < 1e-4


def test_lstm_zero_parameters_give_zero_state(rng):
    h, _ = lstm_forward(rng.normal(size=(7, 3)), np.zeros((3, 20)), np.zeros((5, 20)), np.zeros(20))
    np.testing.assert_array_equal(h, np.zeros(5))


def test_lstm_parameter_count():
    assert parameter_count(LayerSpec(LayerKind.LSTM, 64, 50)) == 23000


def test_lstm_scalar_recurrence_by_hand():
    x = np.array([[0.5], [-1.0]])
    kernel = np.array([[0.1, 0.2, 0.3, 0.4]])
    recurrent = np.array([[0.5, -0.6, 0.7, -0.8]])
    bias = np.array([0.01, 1.0, -0.02, 0.03])

    def sig(v):
        return 1.0 / (1.0 + math.exp(-v))

    h_prev, c_prev = 0.0, 0.0
    for x_t in x[:, 0]:
        z = [x_t * kernel[0, j] + h_prev * recurrent[0, j] + bias[j] for j in range(4)]
        i, f, g, o = sig(z[0]), sig(z[1]), math.tanh(z[2]), sig(z[3])
        c_prev = f * c_prev + i * g
        h_prev = o * math.tanh(c_prev)

    h, _ = lstm_forward(x, kernel, recurrent, bias)
    assert h[0] == pytest.approx(h_prev, abs=1e-14)


def test_lstm_single_step_gradient_closed_form(rng):
    units = 3
    x = rng.normal(size=(1, 2))
    kernel = rng.normal(size=(2, 4 * units))
    recurrent = rng.normal(size=(units, 4 * units))
    bias = rng.normal(size=4 * units)
    delta = rng.normal(size=units)

    z = x[0] @ kernel + bias
    zi, _, zg, zo = np.split(z, 4)
    i, g, o = 1.0 / (1.0 + np.exp(-zi)), np.tanh(zg), 1.0 / (1.0 + np.exp(-zo))
    c = i * g
    dc = delta * o * (1.0 - np.tanh(c) ** 2)
    dz = np.concatenate(
        [dc * g * i * (1.0 - i), np.zeros(units), dc * i * (1.0 - g * g), delta * np.tanh(c) * o * (1.0 - o)]
    )

    h, cache = lstm_forward(x, kernel, recurrent, bias)
    np.testing.assert_allclose(h, o * np.tanh(c), atol=1e-12)
    gx, grads = lstm_backward(delta, cache)
    np.testing.assert_allclose(grads["kernel"], np.outer(x[0], dz), atol=1e-12)
    np.testing.assert_allclose(grads["bias"], dz, atol=1e-12)
    np.testing.assert_array_equal(grads["recurrent_kernel"], np.zeros_like(recurrent))
    np.testing.assert_allclose(gx[0], kernel @ dz, atol=1e-12)


def test_lstm_zero_upstream_gradient(rng):
    h, cache = lstm_forward(rng.normal(size=(6, 2)), rng.normal(size=(2, 12)), rng.normal(size=(3, 12)), np.zeros(12))
    gx, grads = lstm_backward(np.zeros_like(h), cache)
    assert not gx.any()
    assert all(not g.any() for g in grads.values())


@pytest.mark.parametrize("seed", range(5))
def test_lstm_gradients(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(2, 20, 3))
    kernel = 0.5 * rng.normal(size=(3, 16))
    recurrent = 0.5 * rng.normal(size=(4, 16))
    bias = 0.1 * rng.normal(size=16)
    proj = rng.normal(size=(2, 4))

    def objective():
        h, _ = lstm_forward(x, kernel, recurrent, bias)
        return float(np.sum(h * proj))

    _, cache = lstm_forward(x, kernel, recurrent, bias)
    gx, grads = lstm_backward(proj, cache)
    checks = ((kernel, grads["kernel"]), (recurrent, grads["recurrent_kernel"]), (bias, grads["bias"]), (x, gx))
    for array, analytic in checks:
        assert max_relative_error(objective, array, analytic, rng, n_coords=100) < 1e-4


def test_dense_identity_and_oracle(rng):
    x = rng.normal(size=4)
    out, _ = dense_forward(x, np.eye(4), np.zeros(4), "linear")
    np.testing.assert_array_equal(out, x)

    w = rng.normal(size=(4, 3))
    b = rng.normal(size=3)
    out, _ = dense_forward(x, w, b, "linear")
    expected = np.array([sum(x[i] * w[i, j] for i in range(4)) + b[j] for j in range(3)])
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_dense_linear_gradient_is_outer_product(rng):
    x = rng.normal(size=4)
    w = rng.normal(size=(4, 3))
    grad_out = rng.normal(size=3)
    _, cache = dense_forward(x, w, rng.normal(size=3), "linear")
    gx, gw, gb = dense_backward(grad_out, cache)
    np.testing.assert_allclose(gw, np.outer(x, grad_out), atol=1e-12)
    np.testing.assert_allclose(gb, grad_out, atol=1e-12)
    np.testing.assert_allclose(gx, w @ grad_out, atol=1e-12)


def test_dense_parameter_counts():
    assert parameter_count(LayerSpec(LayerKind.DENSE, 50, 10)) == 510
    assert parameter_count(LayerSpec(LayerKind.DENSE, 10, 1)) == 11


def test_dense_dimension_mismatch():
    with pytest.raises(DimensionError):
        dense_forward(np.zeros(5), np.zeros((4, 3)), np.zeros(3))


@pytest.mark.parametrize("seed", range(5))
def test_dense_gradients(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(5, 4))
    w = rng.normal(size=(4, 3))
    b = rng.normal(size=3)
    proj = rng.normal(size=(5, 3))

    def objective():
        out, _ = dense_forward(x, w, b, "sigmoid")
        return float(np.sum(out * proj))

    _, cache = dense_forward(x, w, b, "sigmoid")
    gx, gw, gb = dense_backward(proj, cache)
    for array, analytic in ((w, gw), (b, gb), (x, gx)):
        assert max_relative_error(objective, array, analytic, rng, n_coords=100) < 1e-4
