"""MLP and multi-head actor contracts: shapes, oracles, gradient exactness."""

import numpy as np
import pytest

from deskworld.learn import autodiff as ad
from deskworld.learn.errors import ParameterError
from deskworld.learn.nets import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    check_descriptor,
    head_count,
    init_mlp,
    init_multihead_actor,
    mlp_backward,
    mlp_forward,
    mlp_forward_t,
    multihead_action,
    multihead_action_t,
)


def test_zero_weight_network_returns_final_bias():
    rng = np.random.default_rng(0)
    params = init_mlp(rng, (5, 8, 3))
    for name in params:
        params[name] = np.zeros_like(params[name])
    params["b1"] = np.array([1.0, -2.0, 3.0])
    out = mlp_forward(params, rng.standard_normal((6, 5)))
    np.testing.assert_array_equal(out, np.tile([1.0, -2.0, 3.0], (6, 1)))


def test_identity_activation_is_a_matrix_product():
    rng = np.random.default_rng(1)
    params = init_mlp(rng, (4, 6, 2))
    params["b0"] = np.zeros_like(params["b0"])
    params["b1"] = np.zeros_like(params["b1"])
    x = rng.standard_normal((7, 4))
    out = mlp_forward(params, x, activation="identity")
    np.testing.assert_allclose(out, x @ params["W0"] @ params["W1"], rtol=1e-12)


def test_forward_rejects_bad_shapes_and_activations():
    rng = np.random.default_rng(2)
    params = init_mlp(rng, (4, 6, 2))
    with pytest.raises(ParameterError):
        mlp_forward(params, np.zeros((3, 5)))
    with pytest.raises(ParameterError):
        mlp_forward(params, np.zeros(4))
    with pytest.raises(ParameterError):
        mlp_forward(params, np.zeros((3, 4)), activation="gelu")
    with pytest.raises(ParameterError):
        init_mlp(rng, (4,))


def test_tensor_and_numpy_forwards_agree():
    rng = np.random.default_rng(3)
    params = init_mlp(rng, (5, 16, 16, 2))
    x = rng.standard_normal((9, 5))
    tensors = {k: ad.as_tensor(v) for k, v in params.items()}
    np.testing.assert_array_equal(mlp_forward_t(tensors, x).value, mlp_forward(params, x))


@pytest.mark.parametrize("seed", range(8))
def test_backward_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    sizes = tuple(int(s) for s in rng.integers(2, 7, size=rng.integers(2, 5)))
    params = init_mlp(rng, sizes)
    x = rng.standard_normal((4, sizes[0]))
    cog = rng.standard_normal((4, sizes[-1]))
    grads = mlp_backward(params, x, cog)

    for name, value in params.items():
        def scalar(v, name=name):
            trial = dict(params)
            trial[name] = v
            return float((mlp_forward(trial, x) * cog).sum())

        numeric = ad.numerical_gradient(scalar, value.copy())
        scale = np.max(np.abs(numeric)) + 1e-9
        assert np.max(np.abs(grads[name] - numeric)) / scale < 1e-6, name


def test_backward_rejects_mismatched_cotangent():
    rng = np.random.default_rng(4)
    params = init_mlp(rng, (3, 4, 2))
    with pytest.raises(ParameterError):
        mlp_backward(params, np.zeros((5, 3)), np.zeros((5, 3)))


# --------------------------------------------------------------------- heads


def _actor(rng, task_count=3, obs_dim=6, hidden=(8, 8)):
    return init_multihead_actor(rng, obs_dim, 4, task_count, hidden)


def test_head_count_matches_task_count():
    params = _actor(np.random.default_rng(0), task_count=5)
    assert head_count(params) == 5


def test_descriptor_validation():
    with pytest.raises(ParameterError):
        check_descriptor(np.ones((2, 3)), 3)  # rows sum to 3
    with pytest.raises(ParameterError):
        check_descriptor(np.eye(3), 4)  # wrong width
    bad = np.zeros((2, 3))
    bad[0, 0] = 0.5
    bad[0, 1] = 0.5
    bad[1, 2] = 1.0
    with pytest.raises(ParameterError):
        check_descriptor(bad, 3)
    ok = np.eye(3)[[0, 2, 1]]
    np.testing.assert_array_equal(check_descriptor(ok, 3), ok)


def test_different_descriptors_route_to_different_heads():
    rng = np.random.default_rng(5)
    params = _actor(rng)
    obs = rng.standard_normal((4, 6))
    mu_a, _ = multihead_action(params, obs, np.tile(np.eye(3)[0], (4, 1)))
    mu_b, _ = multihead_action(params, obs, np.tile(np.eye(3)[1], (4, 1)))
    assert not np.allclose(mu_a, mu_b)


def test_log_std_is_clipped():
    rng = np.random.default_rng(6)
    params = _actor(rng)
    params["head0.bs"] = params["head0.bs"] + 1000.0
    _, log_std = multihead_action(
        params, rng.standard_normal((3, 6)), np.tile(np.eye(3)[0], (3, 1))
    )
    assert np.all(log_std <= LOG_STD_MAX)
    assert np.all(log_std >= LOG_STD_MIN)


def test_tensor_and_numpy_actor_agree():
    rng = np.random.default_rng(7)
    params = _actor(rng)
    obs = rng.standard_normal((6, 6))
    desc = np.eye(3)[rng.integers(0, 3, 6)]
    mu_np, ls_np = multihead_action(params, obs, desc)
    tensors = {k: ad.as_tensor(v) for k, v in params.items()}
    mu_t, ls_t = multihead_action_t(tensors, obs, desc)
    np.testing.assert_array_equal(mu_t.value, mu_np)
    np.testing.assert_array_equal(ls_t.value, ls_np)


def test_single_task_batch_gives_exact_zero_grads_to_other_heads():
    rng = np.random.default_rng(8)
    params = _actor(rng)
    obs = rng.standard_normal((5, 6))
    desc = np.tile(np.eye(3)[1], (5, 1))  # every sample belongs to task 1
    tensors = {k: ad.param(v) for k, v in params.items()}
    mu, log_std = multihead_action_t(tensors, obs, desc)
    ad.backward(ad.tsum(mu) + ad.tsum(log_std))
    for k in (0, 2):
        for part in ("Wm", "bm", "Ws", "bs"):
            grad = tensors[f"head{k}.{part}"].grad
            assert grad is not None
            assert np.all(grad == 0.0), f"head{k}.{part}"
    assert np.any(tensors["head1.Wm"].grad != 0.0)
    assert np.any(tensors["trunk.W0"].grad != 0.0)


def test_multihead_gradcheck_against_finite_differences():
    rng = np.random.default_rng(9)
    params = _actor(rng, task_count=2, obs_dim=4, hidden=(6, 5))
    obs = rng.standard_normal((3, 4))
    desc = np.eye(2)[[0, 1, 0]]

    tensors = {k: ad.param(v) for k, v in params.items()}
    mu, log_std = multihead_action_t(tensors, obs, desc)
    loss = ad.tsum(ad.mul(mu, mu)) + ad.tsum(log_std)
    ad.backward(loss)

    for name, value in params.items():
        def scalar(v, name=name):
            trial = dict(params)
            trial[name] = v
            m, s = multihead_action(trial, obs, desc)
            return float((m * m).sum() + s.sum())

        numeric = ad.numerical_gradient(scalar, value.copy())
        got = tensors[name].grad
        scale = np.max(np.abs(numeric)) + 1e-9
        assert np.max(np.abs(got - numeric)) / scale < 1e-6, name
