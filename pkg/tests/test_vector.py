import numpy as np
import pytest

from deskworld.env import ACTION_DIM, EnvConfig, ManipulationEnv
from deskworld.vector import AsyncVectorEnv, SyncVectorEnv, make_vector_env


def _fns(names=("reach", "push", "door-open"), horizon=30, seed=0):
    def make(name, i):
        return lambda: ManipulationEnv(
            name, EnvConfig(horizon=horizon, seed=seed + i, variations_per_task=5)
        )

    return [make(n, i) for i, n in enumerate(names)]


def _drive(vec, n_steps, seed=0, reset_seed=100):
    """Collect full streams; returns (obs, rewards, successes) arrays."""
    rng = np.random.default_rng(seed)
    all_obs, all_r, all_s = [], [], []
    obs, _ = vec.reset_all(reset_seed)
    all_obs.append(obs)
    for _ in range(n_steps):
        actions = rng.uniform(-1, 1, (vec.num_envs, ACTION_DIM))
        obs, rewards, _, truncateds, infos = vec.step_all(actions)
        succ = [
            info["final_info"]["success"] if "final_info" in info else info["success"]
            for info in infos
        ]
        all_obs.append(obs)
        all_r.append(rewards)
        all_s.append(succ)
    return np.asarray(all_obs), np.asarray(all_r), np.asarray(all_s)


def test_single_env_vector_matches_plain_env():
    vec = SyncVectorEnv(_fns(["reach"]))
    plain = ManipulationEnv("reach", EnvConfig(horizon=30, seed=100, variations_per_task=5))
    obs_v, _ = vec.reset_all(100)
    obs_p = plain.reset(0)
    np.testing.assert_array_equal(obs_v[0], obs_p)
    a = np.array([[0.5, -0.5, 0.2, 0.0]])
    obs_v, r_v, *_ = vec.step_all(a)
    obs_p, r_p, *_ = plain.step(a[0])
    np.testing.assert_array_equal(obs_v[0], obs_p)
    assert r_v[0] == r_p


def test_reset_all_deterministic():
    vec = SyncVectorEnv(_fns())
    a, _ = vec.reset_all(7)
    b, _ = vec.reset_all(7)
    np.testing.assert_array_equal(a, b)


def test_reset_all_seeds_envs_with_offset():
    vec = SyncVectorEnv(_fns(["push", "push", "push"]))
    vec.reset_all(41)
    assert [env.config.seed for env in vec.envs] == [41, 42, 43]
    # same task, different per-index seed -> different layouts
    goals = [env.state.goal for env in vec.envs]
    assert np.any(goals[0] != goals[1]) and np.any(goals[1] != goals[2])


def test_autoreset_advances_variation_cyclically():
    vec = SyncVectorEnv(_fns(["reach"], horizon=4))
    vec.reset_all(0)
    seen = [vec.envs[0].variation_index]
    for _ in range(4 * 7):
        _, _, _, truncateds, infos = vec.step_all(np.zeros((1, ACTION_DIM)))
        if truncateds[0]:
            assert "final_observation" in infos[0]
            assert infos[0]["final_info"]["success"] in (True, False)
            assert infos[0]["final_observation"].shape == (39,)
            seen.append(infos[0]["variation_index"])
    assert seen == [0, 1, 2, 3, 4, 0, 1, 2]  # 5 variations, cycling


def test_autoreset_returns_fresh_observation():
    vec = SyncVectorEnv(_fns(["reach"], horizon=3))
    vec.reset_all(0)
    for _ in range(2):
        vec.step_all(np.ones((1, ACTION_DIM)))
    obs, _, _, truncateds, infos = vec.step_all(np.ones((1, ACTION_DIM)))
    assert truncateds[0]
    # fresh episode: previous-frame slots duplicate the current frame
    np.testing.assert_array_equal(obs[0][0:18], obs[0][18:36])
    assert np.any(infos[0]["final_observation"][0:18] != infos[0]["final_observation"][18:36])


def test_action_shape_validation():
    vec = SyncVectorEnv(_fns())
    vec.reset_all(0)
    with pytest.raises(ValueError):
        vec.step_all(np.zeros((2, ACTION_DIM)))
    with pytest.raises(ValueError):
        vec.step_all(np.zeros((3, 3)))


def test_empty_vector_rejected():
    with pytest.raises(ValueError):
        SyncVectorEnv([])


@pytest.mark.parametrize("num_workers", [1, 2, 3])
def test_sync_async_bit_identical(num_workers):
    names = ("reach", "push", "pick-place", "door-open")
    sync = SyncVectorEnv(_fns(names, horizon=20))
    with AsyncVectorEnv(_fns(names, horizon=20), num_workers=num_workers) as asy:
        so, sr, ss = _drive(sync, 90)
        ao, ar, as_ = _drive(asy, 90)
    np.testing.assert_array_equal(so, ao)
    np.testing.assert_array_equal(sr, ar)
    np.testing.assert_array_equal(ss, as_)


def test_async_survives_many_steps():
    with AsyncVectorEnv(_fns(("reach", "push"), horizon=10), num_workers=2) as vec:
        vec.reset_all(0)
        for _ in range(100):
            obs, rewards, *_ = vec.step_all(np.zeros((2, ACTION_DIM)))
        assert obs.shape == (2, 39)
        assert np.all(rewards > 0)


def test_async_close_idempotent():
    vec = AsyncVectorEnv(_fns(["reach"]), num_workers=1)
    vec.reset_all(0)
    vec.close()
    vec.close()
    with pytest.raises(RuntimeError):
        vec.step_all(np.zeros((1, ACTION_DIM)))


def test_make_vector_env_dispatch():
    assert isinstance(make_vector_env(_fns(["reach"]), "sync"), SyncVectorEnv)
    vec = make_vector_env(_fns(["reach"]), "async")
    assert isinstance(vec, AsyncVectorEnv)
    vec.close()
    with pytest.raises(ValueError):
        make_vector_env(_fns(["reach"]), "threads")


def test_per_index_independence():
    """Stepping an env inside a vector matches stepping it alone."""
    vec = SyncVectorEnv(_fns(("reach", "push"), horizon=50))
    vec.reset_all(3)
    rng = np.random.default_rng(1)
    solo = ManipulationEnv("push", EnvConfig(horizon=50, seed=4, variations_per_task=5))
    solo.reset(0)
    for _ in range(40):
        actions = rng.uniform(-1, 1, (2, ACTION_DIM))
        _, rewards, *_ = vec.step_all(actions)
        _, r_solo, *_ = solo.step(actions[1])
        assert rewards[1] == r_solo
