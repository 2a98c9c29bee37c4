"""Batched environment stepping with interchangeable execution strategies.

``sync`` steps every sub-environment in the calling thread; ``async``
farms indices out to persistent worker threads over queues.  Both funnel
through the same per-env autoreset helper, so their observable streams are
bit-identical — the strategy only changes *where* the work happens.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import replace

import numpy as np

from .env import ACTION_DIM, OBS_DIM, ManipulationEnv

STRATEGIES = ("sync", "async")


def _reset_info(env: ManipulationEnv) -> dict:
    return {"task": env.task.name, "variation_index": env.variation_index}


def step_with_autoreset(env: ManipulationEnv, action):
    """Single-env step that rolls into the next variation on truncation.

    The finished episode's last observation and info are surfaced under
    ``final_observation`` / ``final_info``; the returned observation is the
    first of the new episode.  Variations advance cyclically so a sweep of
    ``variations_per_task`` episodes visits every goal exactly once.
    """
    obs, reward, terminated, truncated, info = env.step(action)
    if truncated:
        nxt = (env.variation_index + 1) % env.config.variations_per_task
        final_obs, final_info = obs, info
        obs = env.reset(nxt)
        info = _reset_info(env)
        info["final_observation"] = final_obs
        info["final_info"] = final_info
    return obs, reward, terminated, truncated, info


class _VectorBase:
    def __init__(self, env_fns):
        if not env_fns:
            raise ValueError("need at least one environment")
        self.envs = [fn() for fn in env_fns]
        self.num_envs = len(self.envs)
        self.observation_dim = OBS_DIM
        self.action_dim = ACTION_DIM

    def reset_all(self, seed=None):
        obs = np.zeros((self.num_envs, OBS_DIM))
        infos = []
        for i, env in enumerate(self.envs):
            if seed is not None:
                env.config = replace(env.config, seed=seed + i)
            obs[i] = env.reset(0)
            infos.append(_reset_info(env))
        return obs, infos

    def _check_actions(self, actions):
        actions = np.asarray(actions, dtype=float)
        if actions.shape != (self.num_envs, ACTION_DIM):
            raise ValueError(
                f"actions must have shape {(self.num_envs, ACTION_DIM)}, "
                f"got {actions.shape}"
            )
        return actions

    def _pack(self, results):
        obs = np.stack([r[0] for r in results])
        rewards = np.array([r[1] for r in results])
        terminateds = np.array([r[2] for r in results], dtype=bool)
        truncateds = np.array([r[3] for r in results], dtype=bool)
        infos = [r[4] for r in results]
        return obs, rewards, terminateds, truncateds, infos

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


class SyncVectorEnv(_VectorBase):
    strategy = "sync"

    def step_all(self, actions):
        actions = self._check_actions(actions)
        return self._pack(
            [step_with_autoreset(env, a) for env, a in zip(self.envs, actions)]
        )


class AsyncVectorEnv(_VectorBase):
    """Persistent worker threads, each owning a fixed slice of indices.

    Per step, the coordinator mails each worker its action rows and collects
    (index, transition) messages back, reassembling them in index order.
    Ownership never migrates, so trajectories cannot depend on scheduling.
    """

    strategy = "async"

    def __init__(self, env_fns, num_workers=None):
        super().__init__(env_fns)
        if num_workers is None:
            import os

            num_workers = min(self.num_envs, max(os.cpu_count() or 1, 2))
        self.num_workers = max(1, min(num_workers, self.num_envs))
        self._inboxes = [queue.SimpleQueue() for _ in range(self.num_workers)]
        self._results = queue.SimpleQueue()
        self._owned = [
            [i for i in range(self.num_envs) if i % self.num_workers == w]
            for w in range(self.num_workers)
        ]
        self._threads = [
            threading.Thread(target=self._worker, args=(w,), daemon=True)
            for w in range(self.num_workers)
        ]
        self._closed = False
        for t in self._threads:
            t.start()

    def _worker(self, w):
        inbox = self._inboxes[w]
        while True:
            msg = inbox.get()
            if msg is None:
                return
            for i, action in msg:
                try:
                    self._results.put((i, step_with_autoreset(self.envs[i], action)))
                except BaseException as exc:  # surfaced by the coordinator
                    self._results.put((i, exc))

    def step_all(self, actions):
        if self._closed:
            raise RuntimeError("vector env is closed")
        actions = self._check_actions(actions)
        for w in range(self.num_workers):
            self._inboxes[w].put([(i, actions[i]) for i in self._owned[w]])
        results = [None] * self.num_envs
        for _ in range(self.num_envs):
            i, r = self._results.get()
            if isinstance(r, BaseException):
                raise r
            results[i] = r
        return self._pack(results)

    def close(self):
        if not self._closed:
            self._closed = True
            for box in self._inboxes:
                box.put(None)
            for t in self._threads:
                t.join(timeout=5)


def make_vector_env(env_fns, strategy="sync") -> _VectorBase:
    if strategy == "sync":
        return SyncVectorEnv(env_fns)
    if strategy == "async":
        return AsyncVectorEnv(env_fns)
    raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
