"""Environment IDs and thin handles around the deskworld core.

The bridge owns no logic: construction, seeding, validation, autoreset,
success computation, and every observable value come from the core.  The
handles here only adapt the calling convention to the ecosystem-standard
``reset``/``step`` API and cache the spaces metadata.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass, replace

from deskworld.registry import BENCHMARK_IDS, make_benchmark

from bridgeworld.spaces import Box, action_space, observation_space

NAMESPACE = "Meta-World"


class UnknownIdError(KeyError):
    """Factory lookup failure: the environment ID was never registered."""


@dataclass(frozen=True)
class RegisteredId:
    env_id: str
    core_benchmark: str
    split: str | None  # None for multitask; "train"/"test" for meta pairs


ENV_REGISTRY: dict[str, RegisteredId] = {}


def register_ids() -> None:
    """Populate the ID registry; calling it again is an exact no-op."""
    for core_id in BENCHMARK_IDS:
        if core_id.startswith("ML"):
            for split in ("train", "test"):
                env_id = f"{NAMESPACE}/{core_id}-{split}"
                ENV_REGISTRY[env_id] = RegisteredId(env_id, core_id, split)
        else:
            env_id = f"{NAMESPACE}/{core_id}"
            ENV_REGISTRY[env_id] = RegisteredId(env_id, core_id, None)


def registered_ids() -> tuple[str, ...]:
    return tuple(sorted(ENV_REGISTRY))


class _Guard:
    """Rejects concurrent calls into a single handle (one handle, one
    caller at a time; the core is not reentrant)."""

    def __init__(self):
        self._lock = threading.Lock()

    @contextmanager
    def __call__(self):
        if not self._lock.acquire(blocking=False):
            raise RuntimeError("concurrent call into a single bridged environment")
        try:
            yield
        finally:
            self._lock.release()


class BridgedEnv:
    """Single-environment handle: ``reset() -> (obs, info)``,
    ``step(action) -> (obs, reward, terminated, truncated, info)``.

    Episodes truncate at the core horizon and are NOT auto-reset here;
    stepping past truncation surfaces the core's protocol exception.
    """

    observation_space: Box = observation_space()
    action_space: Box = action_space()

    def __init__(self, core_env):
        self._env = core_env
        self._guard = _Guard()

    @property
    def unwrapped(self):
        return self._env

    @property
    def task_name(self) -> str:
        return self._env.task.name

    def reset(self, *, seed=None, options=None):
        with self._guard():
            if seed is not None:
                self._env.config = replace(self._env.config, seed=int(seed))
            variation = 0 if options is None else int(options.get("variation", 0))
            obs = self._env.reset(variation)
            return obs, {
                "task": self._env.task.name,
                "variation_index": self._env.variation_index,
            }

    def step(self, action):
        with self._guard():
            return self._env.step(action)

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


class BridgedVectorEnv:
    """Batched handle over the core vector environment (autoreset included,
    exactly as the core does it)."""

    def __init__(self, core_vec):
        self._vec = core_vec
        self._guard = _Guard()
        self.num_envs = core_vec.num_envs
        self.task_names = tuple(core_vec.task_set.tasks)
        self.single_observation_space = observation_space()
        self.single_action_space = action_space()

    @property
    def unwrapped(self):
        return self._vec

    def reset(self, *, seed=None):
        with self._guard():
            return self._vec.reset_all(seed)

    def step(self, actions):
        with self._guard():
            return self._vec.step_all(actions)

    def close(self):
        self._vec.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def make(
    env_id: str,
    *,
    seed: int = 0,
    vector_strategy: str = "sync",
    env_name: str | None = None,
    env_names=None,
    config=None,
):
    """Standard factory call: build a registered ID into a handle.

    Single-task IDs come back as a :class:`BridgedEnv`; multi-task IDs as a
    :class:`BridgedVectorEnv`.  All keyword options pass through to the core
    unchanged (``env_name`` is shorthand for a one-element ``env_names``).
    """
    try:
        entry = ENV_REGISTRY[env_id]
    except KeyError:
        raise UnknownIdError(
            f"{env_id!r} is not a registered environment ID; "
            f"known IDs: {', '.join(registered_ids())}"
        ) from None
    if env_name is not None:
        if env_names is not None:
            raise ValueError("pass env_name or env_names, not both")
        env_names = [env_name]

    built = make_benchmark(
        entry.core_benchmark,
        vector_strategy=vector_strategy,
        seed=seed,
        env_names=env_names,
        config=config,
    )
    if entry.split is None:
        vec = built
    else:
        train_vec, test_vec = built
        vec, other = (
            (train_vec, test_vec) if entry.split == "train" else (test_vec, train_vec)
        )
        other.close()

    if vec.num_envs == 1:
        env = vec.envs[0]
        vec.close()
        return BridgedEnv(env)
    return BridgedVectorEnv(vec)


def attach_to_gymnasium() -> bool:
    """Best-effort registration of every bridged ID with the real gymnasium
    package, when it is importable.  Returns True when at least one ID was
    (or already is) registered there; False when gymnasium is absent."""
    try:
        import gymnasium
    except ImportError:
        return False
    attached = 0
    for env_id in registered_ids():
        try:
            gymnasium.register(
                id=env_id,
                entry_point=lambda _id=env_id, **kwargs: make(_id, **kwargs),
            )
            attached += 1
        except Exception:  # already registered or incompatible host version
            attached += 1
    return attached > 0
