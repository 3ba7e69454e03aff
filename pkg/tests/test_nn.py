import numpy as np
import pytest

from gotcha.errors import ConfigError, InputShapeError, NumericError
from gotcha.nn import (
    AdamState,
    GruParams,
    adam_step,
    affine_backward,
    affine_forward,
    flatten_params,
    grad_check,
    gru_backward,
    gru_forward,
    sigmoid,
    unflatten_params,
)


def _zero_gru(e, h):
    return GruParams(
        U_z=np.zeros((h, e)), V_z=np.zeros((h, h)), b_z=np.zeros(h),
        U_r=np.zeros((h, e)), V_r=np.zeros((h, h)), b_r=np.zeros(h),
        U_h=np.zeros((h, e)), V_h=np.zeros((h, h)), b_h=np.zeros(h),
    )


def _random_gru(e, h, rng):
    z = _zero_gru(e, h)
    for name in vars(z):
        setattr(z, name, rng.standard_normal(getattr(z, name).shape) * 0.5)
    return z


def test_affine_identity():
    x = np.array([1.0, -2.0, 3.0])
    y, _ = affine_forward(np.eye(3), np.zeros(3), x)
    assert np.array_equal(y, x)


def test_affine_zero_grad_out():
    rng = np.random.default_rng(0)
    W, b, x = rng.standard_normal((4, 3)), rng.standard_normal(4), rng.standard_normal(3)
    _, cache = affine_forward(W, b, x)
    dW, db, dx = affine_backward(np.zeros(4), cache)
    assert not dW.any() and not db.any() and not dx.any()


def test_affine_shape_mismatch():
    with pytest.raises(InputShapeError):
        affine_forward(np.zeros((2, 3)), np.zeros(2), np.zeros(4))


def test_affine_backward_matches_finite_differences():
    rng = np.random.default_rng(1)
    params = {
        "W": rng.standard_normal((5, 3)),
        "b": rng.standard_normal(5),
        "x": rng.standard_normal(3),
    }
    probe = rng.standard_normal(5)

    def f(p):
        y, _ = affine_forward(p["W"], p["b"], p["x"])
        return float(probe @ y)

    _, cache = affine_forward(params["W"], params["b"], params["x"])
    dW, db, dx = affine_backward(probe, cache)
    err = grad_check(f, params, {"W": dW, "b": db, "x": dx}, h=1e-5)
    assert err < 1e-6


def test_gru_zero_params_halves_state():
    v = np.array([2.0, -4.0, 6.0])
    g, h, _ = gru_forward(_zero_gru(3, 3), np.zeros(3), v)
    assert np.allclose(h, 0.5 * v)
    assert np.array_equal(g, h)


def test_gru_zero_state_zero_params():
    _, h, _ = gru_forward(_zero_gru(2, 2), np.zeros(2), np.zeros(2))
    assert not h.any()


def test_gru_gate_ranges():
    rng = np.random.default_rng(2)
    p = _random_gru(6, 6, rng)
    _, _, cache = gru_forward(p, rng.standard_normal(6), rng.standard_normal(6))
    assert np.all((cache.z > 0) & (cache.z < 1))
    assert np.all((cache.rho > 0) & (cache.rho < 1))
    assert np.all((cache.h_tilde > -1) & (cache.h_tilde < 1))


def test_gru_backward_matches_finite_differences():
    rng = np.random.default_rng(3)
    e = h = 4
    p = _random_gru(e, h, rng)
    r_in = rng.standard_normal(e)
    h_prev = rng.standard_normal(h)
    probe = rng.standard_normal(h)

    params = {name: getattr(p, name) for name in vars(p)}
    params["r_in"] = r_in
    params["h_prev"] = h_prev

    def f(values):
        cell = GruParams(**{k: values[k] for k in vars(p)})
        _, out, _ = gru_forward(cell, values["r_in"], values["h_prev"])
        return float(probe @ out)

    _, out, cache = gru_forward(p, r_in, h_prev)
    grads, dr, dh_prev = gru_backward(p, probe, cache)
    analytic = {name: getattr(grads, name) for name in vars(grads)}
    analytic["r_in"] = dr
    analytic["h_prev"] = dh_prev
    assert grad_check(f, params, analytic, h=1e-5) < 1e-5


def test_adam_first_step_magnitude():
    params = {"w": np.array([0.0])}
    state = AdamState.fresh(params)
    adam_step(params, {"w": np.array([0.7])}, state, lr=0.01)
    assert abs(abs(params["w"][0]) - 0.01) < 1e-6
    assert params["w"][0] < 0  # moves against the gradient


def test_adam_zero_grads_no_move():
    params = {"w": np.array([1.0, 2.0])}
    state = AdamState.fresh(params)
    adam_step(params, {"w": np.zeros(2)}, state, lr=0.1)
    assert np.array_equal(params["w"], [1.0, 2.0])
    assert state.step == 1


def test_adam_deterministic_trajectories():
    rng = np.random.default_rng(4)
    grads = [rng.standard_normal(3) for _ in range(5)]

    def run():
        params = {"w": np.ones(3)}
        state = AdamState.fresh(params)
        for g in grads:
            adam_step(params, {"w": g}, state, lr=0.05)
        return params["w"]

    assert np.array_equal(run(), run())


def test_adam_lr_zero_is_identity():
    params = {"w": np.array([3.0])}
    state = AdamState.fresh(params)
    for _ in range(4):
        adam_step(params, {"w": np.array([1.0])}, state, lr=0.0)
    assert params["w"][0] == 3.0
    assert state.step == 4


def test_adam_rejects_negative_lr():
    params = {"w": np.array([1.0])}
    with pytest.raises(ConfigError):
        adam_step(params, {"w": np.array([1.0])}, AdamState.fresh(params), lr=-0.1)


def test_adam_rejects_non_finite_grad():
    params = {"w": np.array([1.0])}
    with pytest.raises(NumericError):
        adam_step(params, {"w": np.array([np.nan])}, AdamState.fresh(params), lr=0.1)


def test_grad_check_quadratic():
    params = {"theta": np.array([3.0])}

    def f(p):
        return float(p["theta"][0] ** 2)

    assert grad_check(f, params, {"theta": np.array([6.0])}, h=1e-5) < 1e-8


def test_grad_check_constant():
    params = {"theta": np.array([1.0, -2.0])}
    assert grad_check(lambda p: 5.0, params, {"theta": np.zeros(2)}) == 0.0


def test_flatten_round_trip():
    rng = np.random.default_rng(5)
    params = {"b": rng.standard_normal(3), "a": rng.standard_normal((2, 2))}
    vec = flatten_params(params)
    back = unflatten_params(vec, params)
    assert set(back) == {"a", "b"}
    assert np.array_equal(back["a"], params["a"])
    assert np.array_equal(back["b"], params["b"])


def test_sigmoid_stable_extremes():
    out = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
    assert out[0] == 0.0 and out[1] == 0.5 and out[2] == 1.0
