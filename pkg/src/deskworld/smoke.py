"""Calibrated smoke-training recipes with frozen hyperparameters.

These are the reference configurations behind the release gate and the
runnable scripts.  They are tuned to learn on a single CPU core: the
discount is 0.9 (shorter credit horizon keeps the critic's action gap
visible against the bootstrap target scale), networks are small, and
budgets are tens to hundreds of thousands of environment steps.
"""

from __future__ import annotations

import numpy as np

from deskworld.env import EnvConfig
from deskworld.evaluation import EvalReport, evaluate_multitask
from deskworld.learn.training import LearnedAgent, TrainConfig, TrainResult, train
from deskworld.registry import TaskSet, build_vector_env

TRIO_TASKS = ("reach", "push", "drawer-close")

__all__ = [
    "TRIO_TASKS",
    "sac_reach_recipe",
    "mtmhsac_trio_recipe",
    "reward_version_recipe",
    "run_recipe",
    "terminal_q_loss",
]


def _single_task_set(task: str, seed: int) -> TaskSet:
    return TaskSet(
        name=task, tasks=(task,), kind="multitask", variations_per_task=50, seed=seed
    )


def sac_reach_recipe(seed: int = 0, total_steps: int = 40_000):
    """Single-task SAC on reach; expected eval success ~1.0 at this budget."""
    task_set = _single_task_set("reach", seed)
    env_config = EnvConfig(horizon=150, variations_per_task=50)
    train_config = TrainConfig(
        algo="sac",
        total_steps=total_steps,
        warmup_steps=2_000,
        batch_size=128,
        hidden=(64, 64),
        lr=3e-4,
        gamma=0.9,
        diag_every=5_000,
        seed=seed,
    )
    return task_set, env_config, train_config


def mtmhsac_trio_recipe(seed: int = 0, total_steps: int = 300_000):
    """Multi-head SAC on {reach, push, drawer-close}; expected mean ~0.75+."""
    task_set = TaskSet(
        name="trio", tasks=TRIO_TASKS, kind="multitask", variations_per_task=50, seed=seed
    )
    env_config = EnvConfig(horizon=150, variations_per_task=50)
    train_config = TrainConfig(
        algo="mtmhsac",
        total_steps=total_steps,
        warmup_steps=6_000,
        batch_size=256,
        hidden=(128, 128),
        lr=3e-4,
        gamma=0.9,
        diag_every=10_000,
        seed=seed,
    )
    return task_set, env_config, train_config


def reward_version_recipe(reward_version: str, seed: int = 0, total_steps: int = 20_000):
    """Equal-budget trio runs for comparing critic loss scale across
    reward versions (the stateful large-scale rewards produce terminal
    q_loss orders of magnitude above the bounded-range rewards)."""
    task_set = TaskSet(
        name=f"trio-{reward_version}",
        tasks=TRIO_TASKS,
        kind="multitask",
        variations_per_task=50,
        seed=seed,
    )
    env_config = EnvConfig(
        reward_version=reward_version, horizon=150, variations_per_task=50
    )
    train_config = TrainConfig(
        algo="mtmhsac",
        total_steps=total_steps,
        warmup_steps=2_000,
        batch_size=128,
        hidden=(64, 64),
        lr=3e-4,
        gamma=0.9,
        diag_every=2_000,
        seed=seed,
    )
    return task_set, env_config, train_config


def run_recipe(
    task_set: TaskSet,
    env_config: EnvConfig,
    train_config: TrainConfig,
    diagnostics_path=None,
    checkpoint_path=None,
) -> tuple[TrainResult, EvalReport]:
    """Train the recipe, then run the full evaluation protocol on it."""
    result = train(
        task_set,
        env_config,
        train_config,
        diagnostics_path=diagnostics_path,
        checkpoint_path=checkpoint_path,
    )
    agent = LearnedAgent(result.agent, np.arange(len(task_set.tasks)))
    with build_vector_env(task_set, train_config.vector_strategy, env_config) as vec:
        report = evaluate_multitask(agent, vec)
    return result, report


def terminal_q_loss(result: TrainResult, rows: int = 3) -> float:
    """Mean critic loss over the final diagnostic rows (noise-robust scalar)."""
    tail = [row["q_loss"] for row in result.diagnostics[-rows:]]
    if not tail:
        raise ValueError("no diagnostics recorded")
    return float(np.mean(tail))
