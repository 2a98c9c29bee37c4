"""Training loop: vectorized collection, replay, SAC updates, diagnostics.

The three trained algorithms map onto one engine:

- ``sac``      single action head, task one-hot folded into the observation
- ``mtmhsac``  one action head per task plus per-task temperatures
- ``pcgrad``   single head with per-task gradient projection before each step

Step counting is in environment transitions summed across sub-environments
(a vector step over N tasks advances the count by N).  Episodes end only by
time limit here, and those ends are bootstrapped, so the stored done flag is
the terminal signal, not the truncation flag.  Diagnostics rows carry
(step, q_loss, one temperature per task, rolling success rate) and can be
streamed to CSV while training.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from math import nan

import numpy as np

from deskworld.env import ACTION_DIM, OBS_DIM, EnvConfig
from deskworld.learn.checkpoint import load_checkpoint, save_checkpoint
from deskworld.learn.replay import ReplayBuffer
from deskworld.learn.sac import SACConfig, SoftActorCritic
from deskworld.registry import TaskSet, build_vector_env

ALGORITHMS = ("sac", "mtmhsac", "pcgrad")
_ALGO_FLAGS = {  # algo -> (multihead, use_pcgrad)
    "sac": (False, False),
    "mtmhsac": (True, False),
    "pcgrad": (False, True),
}

__all__ = [
    "ALGORITHMS",
    "TrainConfig",
    "TrainResult",
    "LearnedAgent",
    "diagnostics_columns",
    "train",
    "agent_from_checkpoint",
]


@dataclass(frozen=True)
class TrainConfig:
    algo: str = "mtmhsac"
    total_steps: int = 100_000
    warmup_steps: int = 2_000
    batch_size: int = 256
    updates_per_step: int = 1
    hidden: tuple[int, ...] = (400, 400)
    lr: float = 3e-4
    tau: float = 0.005
    gamma: float | None = None  # None -> follow the environment's gamma
    buffer_capacity: int = 200_000
    diag_every: int = 2_000
    vector_strategy: str = "sync"
    seed: int = 0

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ValueError(f"algo must be one of {ALGORITHMS}, got {self.algo!r}")
        if self.total_steps < 1 or self.batch_size < 1:
            raise ValueError("total_steps and batch_size must be positive")


@dataclass
class TrainResult:
    agent: SoftActorCritic
    task_names: tuple[str, ...]
    diagnostics: list[dict] = field(default_factory=list)
    total_steps: int = 0


class LearnedAgent:
    """Evaluation-protocol adapter: deterministic policy per sub-environment."""

    def __init__(self, agent: SoftActorCritic, task_indices):
        self._agent = agent
        self._indices = np.asarray(task_indices, dtype=np.int64)

    def eval_action(self, observations: np.ndarray) -> np.ndarray:
        return self._agent.act(observations, self._indices, deterministic=True)


def diagnostics_columns(task_names) -> list[str]:
    return ["step", "q_loss", *[f"alpha_{n}" for n in task_names], "success_rate"]


def _diag_row(step, last_update, alphas, task_names, recent) -> dict:
    row = {"step": step, "q_loss": last_update.get("q_loss", nan)}
    for name, alpha in zip(task_names, alphas):
        row[f"alpha_{name}"] = float(alpha)
    row["success_rate"] = float(np.mean(recent)) if recent else nan
    return row


def train(
    task_set: TaskSet,
    env_config: EnvConfig | None = None,
    train_config: TrainConfig | None = None,
    diagnostics_path=None,
    checkpoint_path=None,
) -> TrainResult:
    """Run one seeded training job over the given multitask set."""
    if task_set.kind != "multitask":
        raise ValueError("trained algorithms operate on multitask sets")
    env_config = env_config if env_config is not None else EnvConfig()
    tc = train_config if train_config is not None else TrainConfig()
    multihead, use_pcgrad = _ALGO_FLAGS[tc.algo]

    vec = build_vector_env(task_set, tc.vector_strategy, env_config)
    n = vec.num_envs
    agent = SoftActorCritic(
        SACConfig(
            obs_dim=OBS_DIM,
            action_dim=ACTION_DIM,
            task_count=n,
            hidden=tuple(tc.hidden),
            lr=tc.lr,
            gamma=env_config.gamma if tc.gamma is None else tc.gamma,
            tau=tc.tau,
            multihead=multihead,
            use_pcgrad=use_pcgrad,
            seed=tc.seed,
        )
    )
    buffer = ReplayBuffer(tc.buffer_capacity, OBS_DIM, ACTION_DIM, seed=tc.seed)
    warmup_rng = np.random.default_rng([tc.seed, 4])
    env_indices = np.arange(n)

    writer = None
    csv_file = None
    columns = diagnostics_columns(task_set.tasks)
    if diagnostics_path is not None:
        csv_file = open(diagnostics_path, "w", newline="")
        writer = csv.DictWriter(csv_file, fieldnames=columns)
        writer.writeheader()

    result = TrainResult(agent=agent, task_names=task_set.tasks)
    try:
        obs, _ = vec.reset_all()
        saw_success = [False] * n
        recent: deque = deque(maxlen=100)
        last_update: dict = {}
        steps_done = 0
        next_diag = tc.diag_every
        while steps_done < tc.total_steps:
            if steps_done < tc.warmup_steps:
                actions = warmup_rng.uniform(-1.0, 1.0, size=(n, ACTION_DIM))
            else:
                actions = agent.act(obs, env_indices, deterministic=False)
            next_obs, rewards, terms, truncs, infos = vec.step_all(actions)
            for i in range(n):
                true_next = (
                    infos[i]["final_observation"] if truncs[i] else next_obs[i]
                )
                buffer.add(
                    obs[i], actions[i], rewards[i], true_next, float(terms[i]), i
                )
                saw_success[i] |= bool(infos[i].get("success", False))
                if truncs[i] or terms[i]:
                    recent.append(float(saw_success[i]))
                    saw_success[i] = False
            obs = next_obs
            steps_done += n

            if steps_done >= tc.warmup_steps and len(buffer) >= tc.batch_size:
                for _ in range(tc.updates_per_step):
                    last_update = agent.update(buffer.sample(tc.batch_size))

            if steps_done >= next_diag:
                row = _diag_row(
                    steps_done, last_update, agent.alphas, task_set.tasks, recent
                )
                result.diagnostics.append(row)
                if writer is not None:
                    writer.writerow(row)
                    csv_file.flush()
                while next_diag <= steps_done:
                    next_diag += tc.diag_every
        result.total_steps = steps_done
    finally:
        vec.close()
        if csv_file is not None:
            csv_file.close()

    if checkpoint_path is not None:
        save_checkpoint(
            checkpoint_path,
            agent.params,
            metadata={
                "algo": tc.algo,
                "task_names": list(task_set.tasks),
                "obs_dim": OBS_DIM,
                "action_dim": ACTION_DIM,
                "hidden": list(tc.hidden),
                "multihead": multihead,
                "use_pcgrad": use_pcgrad,
                "seed": tc.seed,
                "total_steps": result.total_steps,
                "update_count": agent.update_count,
            },
        )
    return result


def agent_from_checkpoint(path) -> tuple[SoftActorCritic, tuple[str, ...]]:
    """Rebuild a trained agent (and its task-name order) from a checkpoint."""
    params, meta = load_checkpoint(path)
    agent = SoftActorCritic(
        SACConfig(
            obs_dim=int(meta["obs_dim"]),
            action_dim=int(meta["action_dim"]),
            task_count=len(meta["task_names"]),
            hidden=tuple(meta["hidden"]),
            multihead=bool(meta["multihead"]),
            use_pcgrad=bool(meta["use_pcgrad"]),
            seed=int(meta["seed"]),
        )
    )
    if set(params) != set(agent.params):
        raise ValueError("checkpoint parameter names do not match the metadata")
    for name, value in params.items():
        if value.shape != agent.params[name].shape:
            raise ValueError(f"checkpoint tensor {name!r} has the wrong shape")
        agent.params[name] = value.astype(np.float64)
    return agent, tuple(meta["task_names"])
