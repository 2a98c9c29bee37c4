"""Evaluation protocols and statistical aggregation.

Two protocols: multi-task evaluation runs one episode per goal location per
task; goal-hidden evaluation first grants an adaptation budget per test task,
then scores three episodes per goal location.  Aggregation across seeds uses
the interquartile mean with fractional trimming and a stratified bootstrap
confidence interval (tasks resampled independently).
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .env import ProtocolError

ADAPTATION_EPISODES = 10
EVAL_EPISODES_PER_GOAL = 3
DEFAULT_RESAMPLES = 2000

CSV_COLUMNS = (
    "benchmark",
    "reward_version",
    "algorithm",
    "seed",
    "task",
    "success_rate",
    "mean_return",
)


class DegenerateMatrixWarning(UserWarning):
    pass


@dataclass
class EpisodeRecord:
    task: str
    variation: int
    observations: np.ndarray  # (T+1, 39)
    actions: np.ndarray  # (T, 4)
    rewards: np.ndarray  # (T,)
    success: bool  # success held at some step


@dataclass
class EvalReport:
    mean_success_rate: float
    success_rate_per_task: dict[str, float]
    mean_returns: float
    episodes_counted: int
    returns_per_task: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "mean_success_rate": self.mean_success_rate,
                "success_rate_per_task": self.success_rate_per_task,
                "mean_returns": self.mean_returns,
                "episodes_counted": self.episodes_counted,
                "returns_per_task": self.returns_per_task,
            },
            indent=2,
        )

    @staticmethod
    def from_json(text: str) -> "EvalReport":
        doc = json.loads(text)
        return EvalReport(
            mean_success_rate=doc["mean_success_rate"],
            success_rate_per_task=doc["success_rate_per_task"],
            mean_returns=doc["mean_returns"],
            episodes_counted=doc["episodes_counted"],
            returns_per_task=doc.get("returns_per_task", {}),
        )

    def csv_rows(self, benchmark: str, reward_version: str, algorithm: str, seed: int):
        rows = []
        for task, rate in self.success_rate_per_task.items():
            rows.append(
                {
                    "benchmark": benchmark,
                    "reward_version": reward_version,
                    "algorithm": algorithm,
                    "seed": seed,
                    "task": task,
                    "success_rate": rate,
                    "mean_return": self.returns_per_task.get(task, float("nan")),
                }
            )
        return rows


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- episode collection -----------------------------------------------------


def _run_episodes(vec, obs, act_fn, episodes_per_index: int, record_observations=False):
    """Drive the vector until every index finishes the requested number of
    episodes; returns (per-index EpisodeRecord lists, last observation).
    All indices share one horizon, so they finish simultaneously."""
    n = vec.num_envs
    done = [[] for _ in range(n)]
    acc_r = [[] for _ in range(n)]
    acc_o = [[obs[i].copy()] for i in range(n)]
    acc_a = [[] for _ in range(n)]
    acc_success = [False] * n
    while min(len(d) for d in done) < episodes_per_index:
        actions = np.asarray(act_fn(obs), dtype=float)
        obs, rewards, _, truncateds, infos = vec.step_all(actions)
        for i in range(n):
            acc_r[i].append(rewards[i])
            acc_a[i].append(actions[i])
            info = infos[i]
            if truncateds[i]:
                final_info = info["final_info"]
                acc_success[i] = acc_success[i] or final_info["success"]
                if record_observations:
                    acc_o[i].append(info["final_observation"].copy())
                done[i].append(
                    EpisodeRecord(
                        task=final_info["task"],
                        variation=final_info["variation_index"],
                        observations=np.asarray(acc_o[i]) if record_observations else None,
                        actions=np.asarray(acc_a[i]),
                        rewards=np.asarray(acc_r[i]),
                        success=acc_success[i],
                    )
                )
                acc_r[i], acc_a[i], acc_success[i] = [], [], False
                acc_o[i] = [obs[i].copy()]
            else:
                acc_success[i] = acc_success[i] or info["success"]
                if record_observations:
                    acc_o[i].append(obs[i].copy())
    return done, obs


def _check_mode(vec, expected: str):
    modes = {env.config.mode for env in vec.envs}
    if modes != {expected}:
        raise ProtocolError(f"expected all envs in {expected} mode, found {modes}")


def _report_from_episodes(per_index_episodes, tasks, extra_episodes=0) -> EvalReport:
    rates, returns = {}, {}
    for episodes, task in zip(per_index_episodes, tasks):
        rates[task] = float(np.mean([e.success for e in episodes]))
        returns[task] = float(np.mean([e.rewards.sum() for e in episodes]))
    counted = sum(len(e) for e in per_index_episodes) + extra_episodes
    return EvalReport(
        mean_success_rate=float(np.mean(list(rates.values()))),
        success_rate_per_task=rates,
        mean_returns=float(np.mean(list(returns.values()))),
        episodes_counted=counted,
        returns_per_task=returns,
    )


def evaluate_multitask(agent, vec, seed=None) -> EvalReport:
    """One episode per goal location per task, success counted at any step."""
    _check_mode(vec, "multitask")
    obs, _ = vec.reset_all(seed)
    episodes_per_index = vec.envs[0].config.variations_per_task
    per_index, _ = _run_episodes(vec, obs, agent.eval_action, episodes_per_index)
    for episodes in per_index:
        visited = sorted(e.variation for e in episodes[:episodes_per_index])
        if visited != list(range(episodes_per_index)):
            raise AssertionError(f"goal visitation incomplete: {visited}")
    per_index = [eps[:episodes_per_index] for eps in per_index]
    tasks = [env.task.name for env in vec.envs]
    return _report_from_episodes(per_index, tasks)


def evaluate_metalearning(agent, test_vec, seed=None) -> EvalReport:
    """Adaptation budget first, then scored episodes on every goal.

    Per test task: ADAPTATION_EPISODES episodes driven by the agent's
    adapt_action, one adapt() call with those rollouts, then
    EVAL_EPISODES_PER_GOAL × variations_per_task scored episodes driven by
    eval_action.  Goal slots stay zeroed throughout; this is asserted.
    """
    for hook in ("adapt_action", "adapt", "eval_action"):
        if not hasattr(agent, hook):
            raise ProtocolError(f"agent lacks adaptation hook {hook!r}")
    _check_mode(test_vec, "meta")

    def checked(act_fn):
        def inner(obs):
            if not np.all(obs[:, 36:39] == 0.0):
                raise AssertionError("goal leaked into a goal-hidden observation")
            return act_fn(obs)

        return inner

    obs, _ = test_vec.reset_all(seed)
    adaptation, obs = _run_episodes(
        test_vec, obs, checked(agent.adapt_action), ADAPTATION_EPISODES, record_observations=True
    )
    adaptation = [eps[:ADAPTATION_EPISODES] for eps in adaptation]
    agent.adapt(adaptation)

    variations = test_vec.envs[0].config.variations_per_task
    eval_count = EVAL_EPISODES_PER_GOAL * variations
    per_index, _ = _run_episodes(test_vec, obs, checked(agent.eval_action), eval_count)
    per_index = [eps[:eval_count] for eps in per_index]
    for episodes in per_index:
        counts = np.bincount([e.variation for e in episodes], minlength=variations)
        if not np.all(counts == EVAL_EPISODES_PER_GOAL):
            raise AssertionError(f"goal visitation uneven: {counts}")
    tasks = [env.task.name for env in test_vec.envs]
    extra = ADAPTATION_EPISODES * test_vec.num_envs
    return _report_from_episodes(per_index, tasks, extra_episodes=extra)


# -- aggregation ------------------------------------------------------------


def _iqm_weights(n: int) -> np.ndarray:
    """Per-order-statistic weights implementing fractional 25/75 trimming:
    element i covers [i, i+1) of the sorted mass; overlap with the kept band
    [n/4, 3n/4] gives its weight."""
    idx = np.arange(n)
    lo, hi = 0.25 * n, 0.75 * n
    return np.clip(np.minimum(idx + 1, hi) - np.maximum(idx, lo), 0.0, 1.0)


def iqm(values) -> float:
    arr = np.sort(np.asarray(values, dtype=float).ravel())
    if arr.size == 0:
        raise ValueError("iqm of an empty collection")
    w = _iqm_weights(arr.size)
    return float(np.dot(w, arr) / w.sum())


def stratified_bootstrap_ci(
    matrix, n_resamples: int = DEFAULT_RESAMPLES, level: float = 0.95, seed: int = 0
):
    """Percentile bootstrap interval for the IQM of an S×T seed-by-task
    matrix; rows are resampled with replacement independently per task
    column.  Deterministic in (matrix shape, seed)."""
    values = np.asarray(matrix, dtype=float)
    if values.ndim != 2 or values.size == 0:
        raise ValueError("matrix must be a non-empty 2-D array")
    if n_resamples < 100:
        raise ValueError("n_resamples must be at least 100")
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    s, t = values.shape
    if s == 1:
        point = iqm(values)
        warnings.warn(
            "single-seed matrix: interval degenerates to the point estimate",
            DegenerateMatrixWarning,
        )
        return point, point
    rng = np.random.default_rng([seed, s, t])
    idx = rng.integers(0, s, size=(n_resamples, s, t))
    resampled = values[idx, np.arange(t)]  # (R, S, T)
    flat = np.sort(resampled.reshape(n_resamples, s * t), axis=1)
    w = _iqm_weights(s * t)
    stats = flat @ w / w.sum()
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)
