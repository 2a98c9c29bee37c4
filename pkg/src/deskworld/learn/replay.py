"""Fixed-capacity uniform replay buffer with a seeded sampling stream."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Batch", "ReplayBuffer"]


@dataclass(frozen=True)
class Batch:
    obs: np.ndarray          # (B, obs_dim)
    actions: np.ndarray      # (B, action_dim)
    rewards: np.ndarray      # (B,)
    next_obs: np.ndarray     # (B, obs_dim)
    dones: np.ndarray        # (B,) float 0/1
    task_indices: np.ndarray  # (B,) int


class ReplayBuffer:
    """Ring buffer over preallocated arrays; sampling is with replacement."""

    def __init__(self, capacity: int, obs_dim: int = 39, action_dim: int = 4, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._obs = np.zeros((capacity, obs_dim))
        self._actions = np.zeros((capacity, action_dim))
        self._rewards = np.zeros(capacity)
        self._next_obs = np.zeros((capacity, obs_dim))
        self._dones = np.zeros(capacity)
        self._tasks = np.zeros(capacity, dtype=np.int64)
        self._rng = np.random.default_rng([seed, 17])
        self._ptr = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(self, obs, action, reward, next_obs, done, task_index) -> None:
        i = self._ptr
        self._obs[i] = obs
        self._actions[i] = action
        self._rewards[i] = reward
        self._next_obs[i] = next_obs
        self._dones[i] = float(done)
        self._tasks[i] = task_index
        self._ptr = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int) -> Batch:
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = self._rng.integers(0, self._size, size=batch_size)
        return Batch(
            obs=self._obs[idx].copy(),
            actions=self._actions[idx].copy(),
            rewards=self._rewards[idx].copy(),
            next_obs=self._next_obs[idx].copy(),
            dones=self._dones[idx].copy(),
            task_indices=self._tasks[idx].copy(),
        )
