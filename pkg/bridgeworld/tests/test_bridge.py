"""Bridge contract: ID registry, spaces, passthrough parity, protocol."""

from __future__ import annotations

import importlib.util
import subprocess
import sys

import numpy as np
import pytest

import bridgeworld
from deskworld.agents import ScriptedAgent
from deskworld.env import EnvConfig, ManipulationEnv, ProtocolError
from deskworld.registry import make_benchmark

# Single-task and custom IDs need task names to construct.
EXTRA_KWARGS = {
    "Meta-World/MT1": {"env_name": "reach"},
    "Meta-World/ML1-train": {"env_name": "reach"},
    "Meta-World/ML1-test": {"env_name": "reach"},
    "Meta-World/MT-custom": {"env_names": ["reach", "push"]},
    "Meta-World/ML-custom-train": {"env_names": ["reach", "push", "drawer-close"]},
    "Meta-World/ML-custom-test": {"env_names": ["reach", "push", "drawer-close"]},
}


# ------------------------------------------------------------------ registry


def test_import_registers_ids_idempotently():
    ids = bridgeworld.registered_ids()
    assert "Meta-World/MT10" in ids
    assert "Meta-World/ML10-analog-train" in ids and "Meta-World/ML10-analog-test" in ids
    before = dict(bridgeworld.ENV_REGISTRY)
    bridgeworld.register_ids()
    bridgeworld.register_ids()
    assert bridgeworld.ENV_REGISTRY == before


def test_unknown_id_is_a_lookup_failure():
    with pytest.raises(bridgeworld.UnknownIdError):
        bridgeworld.make("Meta-World/MT9000")
    with pytest.raises(KeyError):  # generic hosts catch the standard type
        bridgeworld.make("nope")


@pytest.mark.parametrize("env_id", sorted(bridgeworld.ENV_REGISTRY))
def test_every_registered_id_constructs_and_round_trips(env_id):
    handle = bridgeworld.make(env_id, seed=0, **EXTRA_KWARGS.get(env_id, {}))
    with handle:
        if isinstance(handle, bridgeworld.BridgedEnv):
            obs, info = handle.reset()
            assert obs.shape == (39,)
            assert "task" in info
            obs2, reward, terminated, truncated, info = handle.step(np.zeros(4))
            assert obs2.shape == (39,)
            assert isinstance(reward, float) and "success" in info
            assert not terminated  # episodes only truncate
        else:
            n = handle.num_envs
            obs, infos = handle.reset(seed=0)
            assert obs.shape == (n, 39) and len(infos) == n
            obs2, rewards, terms, truncs, infos = handle.step(np.zeros((n, 4)))
            assert obs2.shape == (n, 39) and rewards.shape == (n,)
            assert not terms.any()


def test_meta_splits_are_disjoint():
    train = bridgeworld.make("Meta-World/ML10-analog-train", seed=0)
    test = bridgeworld.make("Meta-World/ML10-analog-test", seed=0)
    with train, test:
        assert isinstance(train, bridgeworld.BridgedVectorEnv)
        assert not set(train.task_names) & set(test.task_names)


# -------------------------------------------------------------------- spaces


def test_spaces_match_the_core_contract():
    env = bridgeworld.make("Meta-World/MT1", env_name="reach")
    assert env.observation_space.shape == (39,)
    assert env.action_space.shape == (4,)
    assert np.all(env.action_space.low == -1.0)
    assert np.all(env.action_space.high == 1.0)
    obs, _ = env.reset()
    assert env.observation_space.contains(obs)
    assert env.action_space.contains(np.zeros(4))
    assert not env.action_space.contains(np.full(4, 1.5))
    assert not env.observation_space.contains(np.zeros(38))


def test_box_validation():
    with pytest.raises(ValueError):
        bridgeworld.Box(low=np.zeros(3), high=np.zeros(2))
    with pytest.raises(ValueError):
        bridgeworld.Box(low=np.ones(2), high=np.zeros(2))


# -------------------------------------------------------------- passthrough


def test_single_env_passthrough_is_byte_faithful():
    bridged = bridgeworld.make("Meta-World/MT1", env_name="reach", seed=7)
    native = ManipulationEnv(
        "reach", EnvConfig(mode="multitask", seed=7, variations_per_task=50)
    )
    rng = np.random.default_rng(3)
    actions = rng.uniform(-1, 1, (60, 4))
    obs_b, _ = bridged.reset(options={"variation": 2})
    obs_n = native.reset(2)
    assert obs_b.tobytes() == obs_n.tobytes()
    for action in actions:
        ob, rb, tb, cb, ib = bridged.step(action)
        on, rn, tn, cn, in_ = native.step(action)
        assert ob.tobytes() == on.tobytes()
        assert rb == rn and tb == tn and cb == cn
        assert ib["success"] == in_["success"]


def test_vector_passthrough_is_byte_faithful():
    bridged = bridgeworld.make("Meta-World/MT10", seed=5)
    native = make_benchmark("MT10", seed=5)
    rng = np.random.default_rng(8)
    with bridged, native:
        obs_b, _ = bridged.reset(seed=5)
        obs_n, _ = native.reset_all(5)
        assert obs_b.tobytes() == obs_n.tobytes()
        for _ in range(10):
            actions = rng.uniform(-1, 1, (bridged.num_envs, 4))
            ob, rb, *_ = bridged.step(actions)
            on, rn, *_ = native.step_all(actions)
            assert ob.tobytes() == on.tobytes()
            assert rb.tobytes() == rn.tobytes()


def test_scripted_rollout_matches_cli_dump(tmp_path):
    """100 scripted steps through the bridge reproduce the core CLI's
    reward-trace rows value-for-value."""
    dump = tmp_path / "trace.csv"
    subprocess.run(
        [
            sys.executable,
            "-m",
            "deskworld.cli",
            "reward-trace",
            "--task",
            "pick-place",
            "--reward-version",
            "v2",
            "--seed",
            "0",
            "--out",
            str(dump),
        ],
        check=True,
        capture_output=True,
    )
    rows = dump.read_text().strip().splitlines()[1:101]
    assert len(rows) == 100

    env = bridgeworld.make("Meta-World/MT1", env_name="pick-place", seed=0)
    agent = ScriptedAgent(["pick-place"])
    obs, _ = env.reset(options={"variation": 0})
    for row in rows:
        _, reward_text, success_text = row.split(",")
        action = agent.eval_action(obs[None])[0]
        obs, reward, _, _, info = env.step(action)
        assert reward == float(reward_text)
        assert int(info["success"]) == int(success_text)


# ------------------------------------------------------------------ protocol


def test_reset_twice_same_seed_identical():
    env = bridgeworld.make("Meta-World/MT1", env_name="push")
    a, _ = env.reset(seed=11)
    b, _ = env.reset(seed=11)
    assert a.tobytes() == b.tobytes()


def test_step_after_truncation_surfaces_core_error():
    env = bridgeworld.make(
        "Meta-World/MT1", env_name="reach", config=EnvConfig(horizon=3)
    )
    env.reset()
    for _ in range(3):
        *_, truncated, _ = env.step(np.zeros(4))
    assert truncated
    with pytest.raises(ProtocolError):
        env.step(np.zeros(4))


def test_concurrent_calls_into_one_handle_are_rejected():
    env = bridgeworld.make("Meta-World/MT1", env_name="reach")
    env.reset()
    env._guard._lock.acquire()  # simulate a call in flight elsewhere
    try:
        with pytest.raises(RuntimeError, match="concurrent"):
            env.step(np.zeros(4))
    finally:
        env._guard._lock.release()
    env.step(np.zeros(4))  # released handle works again


def test_gymnasium_attachment_matches_availability():
    available = importlib.util.find_spec("gymnasium") is not None
    assert bridgeworld.attach_to_gymnasium() is available
