"""Actor-critic engine contracts: targets, temperatures, isolation, replay."""

import numpy as np
import pytest

from deskworld.learn.checkpoint import (
    CHECKPOINT_VERSION,
    load_checkpoint,
    save_checkpoint,
)
from deskworld.learn.errors import ParameterError, TrainingError
from deskworld.learn.optim import Adam
from deskworld.learn.replay import Batch, ReplayBuffer
from deskworld.learn.sac import SACConfig, SoftActorCritic, sac_update


def _small_config(**overrides):
    base = dict(
        obs_dim=6, action_dim=4, task_count=3, hidden=(12, 12), seed=3
    )
    base.update(overrides)
    return SACConfig(**base)


def _batch(rng, n=24, task_count=3, obs_dim=6, tasks=None):
    tasks = (
        rng.integers(0, task_count, n) if tasks is None else np.asarray(tasks)
    )
    return Batch(
        obs=rng.standard_normal((n, obs_dim)),
        actions=np.tanh(rng.standard_normal((n, 4))),
        rewards=rng.standard_normal(n),
        next_obs=rng.standard_normal((n, obs_dim)),
        dones=np.zeros(n),
        task_indices=tasks,
    )


# ------------------------------------------------------------------- optimizer


def test_adam_moves_against_gradient_and_skips_absent_names():
    params = {"w": np.array([1.0, 1.0]), "v": np.array([5.0])}
    opt = Adam(lr=0.1)
    opt.step(params, {"w": np.array([1.0, -1.0])})
    assert params["w"][0] < 1.0 < params["w"][1]
    assert params["v"][0] == 5.0
    with pytest.raises(ParameterError):
        opt.step(params, {"missing": np.zeros(1)})
    with pytest.raises(ParameterError):
        opt.step(params, {"w": np.zeros(3)})


# ----------------------------------------------------------------------- replay


def test_replay_ring_and_seeded_sampling():
    buf = ReplayBuffer(capacity=5, obs_dim=3, action_dim=2, seed=9)
    with pytest.raises(ValueError):
        buf.sample(1)
    for i in range(8):  # wraps: keeps the last 5
        buf.add(np.full(3, i), np.zeros(2), float(i), np.full(3, i + 1), 0.0, i % 2)
    assert len(buf) == 5
    batch = buf.sample(16)
    assert batch.obs.shape == (16, 3)
    assert set(np.unique(batch.rewards)) <= {3.0, 4.0, 5.0, 6.0, 7.0}
    twin = ReplayBuffer(capacity=5, obs_dim=3, action_dim=2, seed=9)
    for i in range(8):
        twin.add(np.full(3, i), np.zeros(2), float(i), np.full(3, i + 1), 0.0, i % 2)
    np.testing.assert_array_equal(twin.sample(16).rewards, batch.rewards)


def test_replay_rejects_bad_capacity():
    with pytest.raises(ValueError):
        ReplayBuffer(capacity=0)


# -------------------------------------------------------------------- the agent


def test_config_validation():
    with pytest.raises(ParameterError):
        SACConfig(task_count=0)
    with pytest.raises(ParameterError):
        SACConfig(tau=0.0)
    with pytest.raises(ParameterError):
        SACConfig(gamma=1.0)
    assert SACConfig(action_dim=4).entropy_target == -4.0
    assert SACConfig(target_entropy=-2.0).entropy_target == -2.0


def test_parameter_inventory():
    agent = SoftActorCritic(_small_config())
    names = set(agent.params)
    assert {"log_alpha_0", "log_alpha_1", "log_alpha_2"} <= names
    assert {"q1.W0", "q2.W0", "target_q1.W0", "target_q2.W0"} <= names
    assert all(np.all(np.isfinite(v)) for v in agent.params.values())
    np.testing.assert_array_equal(agent.alphas, [1.0, 1.0, 1.0])


def test_actions_are_bounded_and_deterministic_mode_repeats():
    agent = SoftActorCritic(_small_config())
    rng = np.random.default_rng(0)
    obs = rng.standard_normal((5, 6))
    tasks = np.array([0, 1, 2, 0, 1])
    a1 = agent.act(obs, tasks, deterministic=True)
    a2 = agent.act(obs, tasks, deterministic=True)
    np.testing.assert_array_equal(a1, a2)
    assert np.all(np.abs(a1) < 1.0)
    s1 = agent.act(obs, tasks, deterministic=False)
    s2 = agent.act(obs, tasks, deterministic=False)
    assert not np.array_equal(s1, s2)  # fresh noise each call
    assert np.all(np.abs(s1) < 1.0)


def test_done_flag_collapses_target_to_reward():
    agent = SoftActorCritic(_small_config())
    rng = np.random.default_rng(1)
    batch = _batch(rng)
    done_batch = Batch(
        obs=batch.obs,
        actions=batch.actions,
        rewards=batch.rewards,
        next_obs=batch.next_obs,
        dones=np.ones_like(batch.dones),
        task_indices=batch.task_indices,
    )
    targets = agent.bootstrap_targets(done_batch)
    np.testing.assert_array_equal(targets, done_batch.rewards)
    alive = agent.bootstrap_targets(batch)
    assert not np.array_equal(alive, batch.rewards)


def test_update_trains_and_reports_diagnostics():
    agent = SoftActorCritic(_small_config())
    rng = np.random.default_rng(2)
    before = {k: v.copy() for k, v in agent.params.items()}
    diag = sac_update(agent, _batch(rng))
    assert set(diag) >= {"q_loss", "actor_loss", "alpha", "batch_size"}
    assert np.isfinite(diag["q_loss"]) and np.isfinite(diag["actor_loss"])
    assert any(not np.array_equal(before[k], agent.params[k]) for k in before)
    assert agent.update_count == 1


def test_absent_task_keeps_its_temperature_bit_unchanged():
    agent = SoftActorCritic(_small_config())
    rng = np.random.default_rng(3)
    # Several updates without any task-2 samples, including earlier updates
    # that moved every temperature (so Adam momentum exists for 0 and 1).
    agent.update(_batch(rng, tasks=rng.integers(0, 3, 24)))
    frozen = agent.params["log_alpha_2"].copy()
    for _ in range(3):
        agent.update(_batch(rng, tasks=rng.integers(0, 2, 24)))
    np.testing.assert_array_equal(agent.params["log_alpha_2"], frozen)
    assert agent.alphas[0] != 1.0  # present tasks did move


def test_polyak_averaging_of_targets():
    cfg = _small_config(tau=0.25)
    agent = SoftActorCritic(cfg)
    old_target = agent.params["target_q1.W0"].copy()
    agent.update(_batch(np.random.default_rng(4)))
    expected = (1.0 - 0.25) * old_target + 0.25 * agent.params["q1.W0"]
    np.testing.assert_array_equal(agent.params["target_q1.W0"], expected)


def test_multihead_batch_of_one_task_leaves_other_heads_untouched():
    agent = SoftActorCritic(_small_config(multihead=True))
    rng = np.random.default_rng(5)
    before = {
        k: v.copy() for k, v in agent.params.items() if k.startswith(("head1", "head2"))
    }
    agent.update(_batch(rng, tasks=np.zeros(24, dtype=int)))
    for name, value in before.items():
        np.testing.assert_array_equal(agent.params[name], value)
    assert not np.array_equal(
        agent.params["head0.Wm"], SoftActorCritic(_small_config()).params["head0.Wm"]
    )


def test_nan_rewards_raise_training_error_with_batch_stats():
    agent = SoftActorCritic(_small_config())
    rng = np.random.default_rng(6)
    batch = _batch(rng)
    batch.rewards[3] = np.nan
    with pytest.raises(TrainingError) as err:
        agent.update(batch)
    message = str(err.value)
    assert "task_counts" in message and "rewards" in message


def test_shape_mismatch_raises_parameter_error():
    agent = SoftActorCritic(_small_config())
    rng = np.random.default_rng(7)
    with pytest.raises(ParameterError):
        agent.update(_batch(rng, obs_dim=5))
    with pytest.raises(ParameterError):
        agent.update(_batch(rng, tasks=np.full(24, 7)))


@pytest.mark.parametrize("multihead,use_pcgrad", [(False, False), (True, False), (False, True), (True, True)])
def test_identical_seeds_train_bit_identically(multihead, use_pcgrad):
    def run():
        agent = SoftActorCritic(
            _small_config(multihead=multihead, use_pcgrad=use_pcgrad, seed=11)
        )
        rng = np.random.default_rng(8)
        for _ in range(4):
            agent.update(_batch(rng))
        return agent.params

    a, b = run(), run()
    assert set(a) == set(b)
    for name in a:
        assert np.array_equal(a[name], b[name]), name


def test_pcgrad_mode_differs_from_plain_on_conflicting_tasks():
    def run(use_pcgrad):
        agent = SoftActorCritic(
            _small_config(multihead=False, use_pcgrad=use_pcgrad, seed=12)
        )
        rng = np.random.default_rng(9)
        for _ in range(5):
            agent.update(_batch(rng))
        return agent.params

    plain, surgered = run(False), run(True)
    assert any(not np.array_equal(plain[k], surgered[k]) for k in plain)


# --------------------------------------------------------------------- storage


def test_checkpoint_roundtrip_is_bit_exact(tmp_path):
    agent = SoftActorCritic(_small_config())
    agent.update(_batch(np.random.default_rng(10)))
    path = tmp_path / "agent.npz"
    save_checkpoint(path, agent.params, metadata={"note": "test", "k": 3})
    params, meta = load_checkpoint(path)
    assert meta == {"note": "test", "k": 3}
    assert set(params) == set(agent.params)
    for name in params:
        assert np.array_equal(params[name], agent.params[name]), name


def test_checkpoint_version_is_enforced(tmp_path):
    import json

    path = tmp_path / "old.npz"
    header = {"checkpoint_version": CHECKPOINT_VERSION + 1, "metadata": {}}
    payload = {
        "__header__": np.frombuffer(json.dumps(header).encode(), dtype=np.uint8),
        "param::w": np.zeros(3),
    }
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **payload)
    with pytest.raises(ValueError, match="version"):
        load_checkpoint(path)
    bare = tmp_path / "bare.npz"
    with open(bare, "wb") as fh:
        np.savez_compressed(fh, w=np.zeros(3))
    with pytest.raises(ValueError, match="header"):
        load_checkpoint(bare)
