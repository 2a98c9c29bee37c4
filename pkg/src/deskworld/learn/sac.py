"""Soft actor-critic with per-task temperatures, optional multi-head actor,
and optional gradient surgery across task gradients.

One engine covers the three trained algorithms:

- single-head: the task one-hot is appended to the observation and one
  action head serves every task (``multihead=False``);
- multi-head: a shared trunk feeds one action head per task, routed by the
  task's one-hot descriptor (``multihead=True``);
- surgery: per-task critic and actor gradients are projected against each
  other before the optimizer step (``use_pcgrad=True``).

Critics always condition on observation + task one-hot + action.  Each task
owns a log-temperature updated only from that task's samples toward a target
entropy of minus the action dimension; a task absent from the batch keeps its
temperature (and its optimizer state) exactly unchanged.  Time-limit ends are
bootstrapped; a stored done flag of 1 truncates the target to the reward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from deskworld.learn import autodiff as ad
from deskworld.learn.autodiff import Tensor
from deskworld.learn.errors import ParameterError, TrainingError
from deskworld.learn.nets import (
    init_mlp,
    init_multihead_actor,
    mlp_forward,
    mlp_forward_t,
    multihead_action,
    multihead_action_t,
)
from deskworld.learn.optim import Adam
from deskworld.learn.pcgrad import pcgrad_project
from deskworld.learn.replay import Batch

LOG_TWO = float(np.log(2.0))
HALF_LOG_TWO_PI = 0.5 * float(np.log(2.0 * np.pi))

__all__ = ["SACConfig", "SoftActorCritic", "sac_update"]


@dataclass(frozen=True)
class SACConfig:
    obs_dim: int = 39
    action_dim: int = 4
    task_count: int = 1
    hidden: tuple[int, ...] = (400, 400)
    lr: float = 3e-4
    gamma: float = 0.99
    tau: float = 0.005
    target_entropy: float | None = None  # defaults to -action_dim
    multihead: bool = True
    use_pcgrad: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.task_count < 1:
            raise ParameterError("task_count must be at least 1")
        if not 0.0 < self.tau <= 1.0:
            raise ParameterError("tau must lie in (0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ParameterError("gamma must lie in [0, 1)")

    @property
    def entropy_target(self) -> float:
        if self.target_entropy is not None:
            return self.target_entropy
        return -float(self.action_dim)


def _flatten(grads: dict[str, np.ndarray], names: list[str]) -> np.ndarray:
    return np.concatenate([np.asarray(grads[n]).ravel() for n in names])


def _unflatten(vec: np.ndarray, names: list[str], shapes: dict[str, tuple]) -> dict:
    out = {}
    offset = 0
    for n in names:
        size = int(np.prod(shapes[n], dtype=np.int64)) if shapes[n] else 1
        out[n] = vec[offset : offset + size].reshape(shapes[n])
        offset += size
    return out


def _batch_stats(batch: Batch, task_count: int) -> str:
    counts = np.bincount(batch.task_indices, minlength=task_count)
    return (
        f"rewards[min/mean/max]=[{batch.rewards.min():.4g}/"
        f"{batch.rewards.mean():.4g}/{batch.rewards.max():.4g}], "
        f"max|obs|={np.abs(batch.obs).max():.4g}, "
        f"max|action|={np.abs(batch.actions).max():.4g}, "
        f"done_fraction={batch.dones.mean():.4g}, "
        f"task_counts={counts.tolist()}"
    )


class SoftActorCritic:
    def __init__(self, config: SACConfig):
        self.config = config
        k = config.task_count
        rng = np.random.default_rng([config.seed, 0])

        # Actor: in single-head mode the task one-hot is folded into the
        # observation and a constant-1 column routes the lone head.
        actor_obs_dim = config.obs_dim if config.multihead else config.obs_dim + k
        head_count = k if config.multihead else 1
        self.params: dict[str, np.ndarray] = init_multihead_actor(
            rng, actor_obs_dim, config.action_dim, head_count, config.hidden
        )
        self._actor_names = list(self.params)

        critic_sizes = (config.obs_dim + k + config.action_dim, *config.hidden, 1)
        critic = init_mlp(rng, critic_sizes, prefix="q1.")
        critic.update(init_mlp(rng, critic_sizes, prefix="q2."))
        self._critic_names = list(critic)
        self.params.update(critic)
        for name in self._critic_names:
            self.params["target_" + name] = self.params[name].copy()

        for i in range(k):
            self.params[f"log_alpha_{i}"] = np.zeros(())

        self._shapes = {n: v.shape for n, v in self.params.items()}
        self._optimizer = Adam(lr=config.lr)
        self._action_rng = np.random.default_rng([config.seed, 1])
        self._update_rng = np.random.default_rng([config.seed, 2])
        self.update_count = 0

    # ------------------------------------------------------------------ utils

    @property
    def alphas(self) -> np.ndarray:
        k = self.config.task_count
        return np.exp(
            np.array([float(self.params[f"log_alpha_{i}"]) for i in range(k)])
        )

    def _one_hot(self, task_indices: np.ndarray) -> np.ndarray:
        task_indices = np.asarray(task_indices, dtype=np.int64)
        k = self.config.task_count
        if task_indices.ndim != 1:
            raise ParameterError("task_indices must be a 1-D integer array")
        if task_indices.min(initial=0) < 0 or task_indices.max(initial=0) >= k:
            raise ParameterError(f"task indices must lie in [0, {k})")
        return np.eye(k)[task_indices]

    def _actor_inputs(self, obs: np.ndarray, one_hot: np.ndarray):
        if self.config.multihead:
            return obs, one_hot
        return np.hstack([obs, one_hot]), np.ones((obs.shape[0], 1))

    def action_parameters(self, obs: np.ndarray, task_indices: np.ndarray):
        """Squashed-Gaussian (mu, log_std) for a batch of observations."""
        obs = np.asarray(obs, dtype=np.float64)
        actor_obs, head_desc = self._actor_inputs(obs, self._one_hot(task_indices))
        return multihead_action(self.params, actor_obs, head_desc)

    def act(self, obs, task_indices, deterministic: bool = False) -> np.ndarray:
        mu, log_std = self.action_parameters(obs, task_indices)
        if deterministic:
            return np.tanh(mu)
        noise = self._action_rng.standard_normal(mu.shape)
        return np.tanh(mu + np.exp(log_std) * noise)

    # ----------------------------------------------------------- log densities

    @staticmethod
    def _log_prob_np(eps: np.ndarray, log_std: np.ndarray, u: np.ndarray):
        normal = (-0.5 * eps * eps - log_std - HALF_LOG_TWO_PI).sum(axis=1)
        corr = 2.0 * (LOG_TWO - u - np.logaddexp(0.0, -2.0 * u))
        return normal - corr.sum(axis=1)

    @staticmethod
    def _log_prob_t(eps: np.ndarray, log_std_t: Tensor, u_t: Tensor) -> Tensor:
        a_dim = eps.shape[1]
        const = (-0.5 * eps * eps).sum(axis=1) - a_dim * HALF_LOG_TWO_PI
        corr = ad.mul(2.0, ad.sub(LOG_TWO, u_t) - ad.softplus(ad.mul(u_t, -2.0)))
        return (
            ad.as_tensor(const) - ad.tsum(log_std_t, axis=1) - ad.tsum(corr, axis=1)
        )

    def bootstrap_targets(self, batch: Batch, noise: np.ndarray | None = None):
        """r + gamma * (1 - done) * (min target Q - alpha * log pi) per sample.

        A done flag of 1 zeroes the bootstrap term, so the target collapses
        to the reward exactly.
        """
        cfg = self.config
        b = batch.obs.shape[0]
        if noise is None:
            noise = self._update_rng.standard_normal((b, cfg.action_dim))
        one_hot = self._one_hot(batch.task_indices)
        alpha_s = self.alphas[batch.task_indices]
        mu2, ls2 = self.action_parameters(batch.next_obs, batch.task_indices)
        u2 = mu2 + np.exp(ls2) * noise
        a2 = np.tanh(u2)
        logp2 = self._log_prob_np(noise, ls2, u2)
        next_in = np.hstack([batch.next_obs, one_hot, a2])
        tq1 = mlp_forward(self.params, next_in, prefix="target_q1.")[:, 0]
        tq2 = mlp_forward(self.params, next_in, prefix="target_q2.")[:, 0]
        return batch.rewards + cfg.gamma * (1.0 - batch.dones) * (
            np.minimum(tq1, tq2) - alpha_s * logp2
        )

    # ------------------------------------------------------------------ losses

    def _critic_graph(self, critic_in, actions, targets, rows):
        tensors = {n: ad.param(self.params[n]) for n in self._critic_names}
        xin = np.hstack([critic_in[rows], actions[rows]])
        q1 = ad.tsum(mlp_forward_t(tensors, xin, prefix="q1."), axis=1)
        q2 = ad.tsum(mlp_forward_t(tensors, xin, prefix="q2."), axis=1)
        d1 = q1 - targets[rows]
        d2 = q2 - targets[rows]
        loss = ad.tmean(ad.mul(d1, d1)) + ad.tmean(ad.mul(d2, d2))
        return loss, tensors

    def _actor_graph(self, obs, one_hot, critic_in, alpha_s, eps, rows):
        tensors = {n: ad.param(self.params[n]) for n in self._actor_names}
        actor_obs, head_desc = self._actor_inputs(obs[rows], one_hot[rows])
        mu, log_std = multihead_action_t(tensors, actor_obs, head_desc)
        u = mu + ad.mul(ad.exp(log_std), eps[rows])
        action = ad.tanh(u)
        logp = self._log_prob_t(eps[rows], log_std, u)

        critic_const = {n: ad.as_tensor(self.params[n]) for n in self._critic_names}
        qin = ad.concat([ad.as_tensor(critic_in[rows]), action], axis=1)
        q1 = ad.tsum(mlp_forward_t(critic_const, qin, prefix="q1."), axis=1)
        q2 = ad.tsum(mlp_forward_t(critic_const, qin, prefix="q2."), axis=1)
        q_min = q1 - ad.relu(q1 - q2)
        loss = ad.tmean(ad.mul(alpha_s[rows], logp) - q_min)
        return loss, tensors, logp

    def _grads_from(self, loss: Tensor, tensors: dict[str, Tensor], names):
        ad.backward(loss)
        return {
            n: (tensors[n].grad if tensors[n].grad is not None
                else np.zeros_like(tensors[n].value))
            for n in names
        }

    def _surgered_step(self, graph_builder, names, task_rows, phase: int):
        """One optimizer step from per-task gradients combined by projection."""
        grads_flat = []
        for rows in task_rows:
            loss, tensors = graph_builder(rows)
            grads = self._grads_from(loss, tensors, names)
            grads_flat.append(_flatten(grads, names))
        combined = pcgrad_project(
            grads_flat, [self.config.seed, 3, self.update_count, phase]
        )
        # Per-task losses are averaged so each present task carries equal
        # weight in the combined direction.
        combined /= len(task_rows)
        self._optimizer.step(self.params, _unflatten(combined, names, self._shapes))

    # ------------------------------------------------------------------ update

    def update(self, batch: Batch) -> dict:
        cfg = self.config
        b = batch.obs.shape[0]
        if batch.obs.shape != (b, cfg.obs_dim) or batch.actions.shape != (
            b,
            cfg.action_dim,
        ):
            raise ParameterError("batch shapes disagree with the configuration")
        one_hot = self._one_hot(batch.task_indices)
        critic_in = np.hstack([batch.obs, one_hot])
        alpha_s = self.alphas[batch.task_indices]

        present = [
            np.flatnonzero(batch.task_indices == k)
            for k in range(cfg.task_count)
            if np.any(batch.task_indices == k)
        ]
        surgery = cfg.use_pcgrad and len(present) > 1

        eps2 = self._update_rng.standard_normal((b, cfg.action_dim))
        targets = self.bootstrap_targets(batch, eps2)

        # Critic step.
        now_in = np.hstack([critic_in, batch.actions])
        q1_now = mlp_forward(self.params, now_in, prefix="q1.")[:, 0]
        q2_now = mlp_forward(self.params, now_in, prefix="q2.")[:, 0]
        q_loss = float(
            np.mean((q1_now - targets) ** 2) + np.mean((q2_now - targets) ** 2)
        )
        if not np.isfinite(q_loss):
            raise TrainingError(
                f"non-finite critic loss {q_loss!r}; "
                + _batch_stats(batch, cfg.task_count)
            )
        if surgery:
            self._surgered_step(
                lambda rows: self._critic_graph(critic_in, batch.actions, targets, rows),
                self._critic_names,
                present,
                phase=0,
            )
        else:
            loss, tensors = self._critic_graph(
                critic_in, batch.actions, targets, np.arange(b)
            )
            grads = self._grads_from(loss, tensors, self._critic_names)
            self._optimizer.step(self.params, grads)

        # Actor step against the freshly updated critics.
        eps = self._update_rng.standard_normal((b, cfg.action_dim))
        full = np.arange(b)
        loss_t, tensors, logp_t = self._actor_graph(
            batch.obs, one_hot, critic_in, alpha_s, eps, full
        )
        actor_loss = float(loss_t.value)
        if not np.isfinite(actor_loss):
            raise TrainingError(
                f"non-finite actor loss {actor_loss!r}; "
                + _batch_stats(batch, cfg.task_count)
            )
        logp_value = logp_t.value
        if surgery:
            self._surgered_step(
                lambda rows: self._actor_graph(
                    batch.obs, one_hot, critic_in, alpha_s, eps, rows
                )[:2],
                self._actor_names,
                present,
                phase=1,
            )
        else:
            grads = self._grads_from(loss_t, tensors, self._actor_names)
            self._optimizer.step(self.params, grads)

        # Temperatures: each present task moves toward the entropy target
        # using only its own samples; absent tasks are untouched.
        for rows in present:
            k = int(batch.task_indices[rows[0]])
            grad = -(logp_value[rows].mean() + cfg.entropy_target)
            self._optimizer.step(
                self.params, {f"log_alpha_{k}": np.asarray(grad)}
            )

        # Polyak averaging of the target critics.
        tau = cfg.tau
        for name in self._critic_names:
            target = "target_" + name
            self.params[target] = (1.0 - tau) * self.params[target] + tau * self.params[
                name
            ]

        self.update_count += 1
        return {
            "q_loss": q_loss,
            "actor_loss": actor_loss,
            "alpha": self.alphas,
            "batch_size": b,
        }


def sac_update(agent: SoftActorCritic, batch: Batch) -> dict:
    """One critic + actor + per-task temperature step; returns diagnostics."""
    return agent.update(batch)
