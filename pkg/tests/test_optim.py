import numpy as np
import pytest

from wristnet.errors import DimensionError, NumericError
from wristnet.nn import NetworkParameters, adam_step


def test_zero_gradient_leaves_fresh_parameters_unchanged():
    params = NetworkParameters(values={"w": np.array([1.0, -2.0])})
    updated = adam_step(params, {"w": np.zeros(2)})
    np.testing.assert_array_equal(updated["w"], params["w"])
    assert updated.t == 1


def test_first_step_closed_form():
    params = NetworkParameters(values={"theta": np.array([0.0])})
    updated = adam_step(params, {"theta": np.array([1.0])}, lr=1e-3)
    assert updated["theta"][0] == pytest.approx(-1e-3, abs=1e-9)


def test_adam_step_does_not_mutate_input():
    params = NetworkParameters(values={"w": np.array([0.5])})
    adam_step(params, {"w": np.array([2.0])})
    assert params["w"][0] == 0.5
    assert params.t == 0
    assert params.m["w"][0] == 0.0


def test_quadratic_trajectory_matches_reference_adam():
    lr, b1, b2, eps = 1e-2, 0.9, 0.999, 1e-7
    params = NetworkParameters(values={"theta": np.array([1.0])})
    theta, m, v = 1.0, 0.0, 0.0
    for t in range(1, 11):
        g = 2.0 * theta
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta = theta - lr * (m / (1 - b1**t)) / ((v / (1 - b2**t)) ** 0.5 + eps)
        params = adam_step(params, {"theta": 2.0 * params["theta"]}, lr, b1, b2, eps)
        assert params["theta"][0] == pytest.approx(theta, abs=1e-10)


def test_adam_is_deterministic(rng):
    values = {"a": rng.normal(size=(3, 2)), "b": rng.normal(size=2)}
    grads = [{k: rng.normal(size=v.shape) for k, v in values.items()} for _ in range(5)]
    runs = []
    for _ in range(2):
        params = NetworkParameters(values={k: v.copy() for k, v in values.items()})
        for g in grads:
            params = adam_step(params, g)
        runs.append(params)
    for name in values:
        np.testing.assert_array_equal(runs[0][name], runs[1][name])


def test_non_finite_gradient_aborts():
    params = NetworkParameters(values={"w": np.zeros(2)})
    with pytest.raises(NumericError):
        adam_step(params, {"w": np.array([np.nan, 0.0])})


def test_gradient_shape_and_presence_checked():
    params = NetworkParameters(values={"w": np.zeros(2), "b": np.zeros(1)})
    with pytest.raises(DimensionError):
        adam_step(params, {"w": np.zeros(2)})
    with pytest.raises(DimensionError):
        adam_step(params, {"w": np.zeros(3), "b": np.zeros(1)})
