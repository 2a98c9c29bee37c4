"""Named benchmark construction: task sets, train/test splits, factories.

Multi-task IDs build one vectorized environment with the goal visible;
meta IDs build separate train and test vectors with the goal hidden and,
for the multi-task-catalog variants, disjoint task lists.  The desk-scale
catalog has 12 tasks, so the wider historical sets appear here as "-analog"
IDs with documented reduced splits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .catalog import task_names
from .env import EnvConfig, ManipulationEnv
from .vector import make_vector_env

BENCHMARK_IDS = (
    "MT1",
    "MT10",
    "MT25",
    "MT50-analog",
    "ML1",
    "ML10-analog",
    "ML25",
    "ML45-analog",
    "MT-custom",
    "ML-custom",
)

# Offset applied to the test split's seed stream so ML1 (same task in train
# and test) still adapts and evaluates on disjoint goal draws.
TEST_SEED_OFFSET = 10_007


class BenchmarkLookupError(KeyError):
    pass


class TaskSetError(ValueError):
    pass


@dataclass(frozen=True)
class TaskSet:
    name: str
    tasks: tuple[str, ...]
    kind: str  # "multitask" | "meta_train" | "meta_test"
    variations_per_task: int = 50
    seed: int = 0

    def __post_init__(self):
        if not self.tasks:
            raise TaskSetError("task set cannot be empty")
        if len(set(self.tasks)) != len(self.tasks):
            raise TaskSetError(f"duplicate tasks in set: {self.tasks}")
        known = set(task_names())
        unknown = [t for t in self.tasks if t not in known]
        if unknown:
            raise TaskSetError(f"unknown tasks: {unknown}")
        if self.kind not in ("multitask", "meta_train", "meta_test"):
            raise TaskSetError(f"bad kind {self.kind!r}")

    def descriptor_for(self, task: str) -> np.ndarray:
        if task not in self.tasks:
            raise BenchmarkLookupError(f"{task!r} not in task set {self.name}")
        one_hot = np.zeros(len(self.tasks))
        one_hot[self.tasks.index(task)] = 1.0
        return one_hot


def descriptor_for(task_set: TaskSet, task: str) -> np.ndarray:
    return task_set.descriptor_for(task)


def build_vector_env(task_set: TaskSet, vector_strategy="sync", config: EnvConfig | None = None):
    """One sub-environment per task, seeded from the set's seed."""
    base = config if config is not None else EnvConfig()
    mode = "multitask" if task_set.kind == "multitask" else "meta"
    fns = []
    for i, name in enumerate(task_set.tasks):
        cfg = replace(
            base,
            mode=mode,
            seed=task_set.seed + i,
            variations_per_task=task_set.variations_per_task,
        )
        fns.append(lambda name=name, cfg=cfg: ManipulationEnv(name, cfg))
    vec = make_vector_env(fns, vector_strategy)
    vec.task_set = task_set
    return vec


def construct_mixed_set(
    per_task_solved: dict[str, bool],
    n_solved: int,
    n_unsolved: int,
    seed: int = 0,
    kind: str = "multitask",
    name: str = "mixed",
) -> TaskSet:
    """Seeded selection of n_solved solved + n_unsolved unsolved tasks.

    This is the mixed-difficulty construction: pull from each difficulty
    class separately so the resulting set is balanced by design.
    """
    if n_solved + n_unsolved <= 0:
        raise TaskSetError("requested an empty mixed set")
    order = [t for t in task_names() if t in per_task_solved]
    solved = [t for t in order if per_task_solved[t]]
    unsolved = [t for t in order if not per_task_solved[t]]
    if len(solved) < n_solved or len(unsolved) < n_unsolved:
        raise TaskSetError(
            f"need {n_solved} solved/{n_unsolved} unsolved tasks, have "
            f"{len(solved)}/{len(unsolved)}"
        )
    rng = np.random.default_rng([seed, len(order)])
    picked_solved = [solved[i] for i in sorted(rng.choice(len(solved), n_solved, replace=False))]
    picked_unsolved = [
        unsolved[i] for i in sorted(rng.choice(len(unsolved), n_unsolved, replace=False))
    ]
    return TaskSet(name=name, tasks=tuple(picked_solved + picked_unsolved), kind=kind, seed=seed)


def reference_solved_map() -> dict[str, bool]:
    """Which catalog tasks a recorded development training run solved;
    shipped as data so mixed-difficulty sets are stable across machines."""
    raw = resources.files("deskworld").joinpath("data/reference_results.json").read_text()
    doc = json.loads(raw)
    return {row["task"]: bool(row["solved"]) for row in doc["tasks"]}


@dataclass(frozen=True)
class _Split:
    train: tuple[str, ...]
    test: tuple[str, ...]


def _catalog_split(n_train: int, n_test: int) -> _Split:
    names = task_names()
    if n_train + n_test > len(names):
        raise TaskSetError("split larger than catalog")
    return _Split(train=names[:n_train], test=names[len(names) - n_test :])


def _mixed_split(seed: int) -> _Split:
    # 4 solved + 4 unsolved, one of each held out for test
    chosen = construct_mixed_set(
        reference_solved_map(), 4, 4, seed=seed, kind="multitask", name="ML25-pool"
    ).tasks
    solved_part, unsolved_part = chosen[:4], chosen[4:]
    return _Split(
        train=solved_part[:3] + unsolved_part[:3],
        test=(solved_part[3], unsolved_part[3]),
    )


def make_benchmark(
    benchmark_id: str,
    *,
    vector_strategy: str = "sync",
    seed: int = 0,
    env_names: list[str] | None = None,
    config: EnvConfig | None = None,
):
    """Build the vectorized environment(s) for a benchmark ID.

    Multi-task IDs return a single VectorEnv; meta IDs return a
    (train, test) pair whose test seeds are offset so goal draws never
    overlap the train stream.
    """
    if benchmark_id not in BENCHMARK_IDS:
        raise BenchmarkLookupError(
            f"unknown benchmark {benchmark_id!r}; expected one of {BENCHMARK_IDS}"
        )
    names = task_names()
    variations = (config or EnvConfig()).variations_per_task

    def _mt(tasks, label):
        ts = TaskSet(
            name=label,
            tasks=tuple(tasks),
            kind="multitask",
            variations_per_task=variations,
            seed=seed,
        )
        return build_vector_env(ts, vector_strategy, config)

    def _ml(train_tasks, test_tasks, label):
        train = TaskSet(
            name=f"{label}-train",
            tasks=tuple(train_tasks),
            kind="meta_train",
            variations_per_task=variations,
            seed=seed,
        )
        test = TaskSet(
            name=f"{label}-test",
            tasks=tuple(test_tasks),
            kind="meta_test",
            variations_per_task=variations,
            seed=seed + TEST_SEED_OFFSET,
        )
        if label != "ML1" and set(train.tasks) & set(test.tasks):
            raise TaskSetError(f"{label}: train/test task overlap")
        return (
            build_vector_env(train, vector_strategy, config),
            build_vector_env(test, vector_strategy, config),
        )

    if benchmark_id in ("MT1", "ML1"):
        if not env_names or len(env_names) != 1:
            raise TaskSetError(f"{benchmark_id} requires exactly one task name")
        if benchmark_id == "MT1":
            return _mt(env_names, "MT1")
        return _ml(env_names, env_names, "ML1")
    if benchmark_id == "MT-custom":
        if not env_names:
            raise TaskSetError("MT-custom requires env_names")
        return _mt(env_names, "MT-custom")
    if benchmark_id == "ML-custom":
        if not env_names or len(env_names) < 2:
            raise TaskSetError("ML-custom requires at least two env_names")
        # hold out the last task
        return _ml(env_names[:-1], env_names[-1:], "ML-custom")
    if env_names:
        raise TaskSetError(f"{benchmark_id} does not accept env_names")

    if benchmark_id == "MT10":
        return _mt(names[:10], "MT10")
    if benchmark_id == "MT50-analog":
        return _mt(names, "MT50-analog")
    if benchmark_id == "MT25":
        ts = construct_mixed_set(
            reference_solved_map(), 3, 3, seed=seed, kind="multitask", name="MT25"
        )
        ts = replace(ts, variations_per_task=variations)
        return build_vector_env(ts, vector_strategy, config)
    if benchmark_id == "ML10-analog":
        split = _catalog_split(9, 3)
        return _ml(split.train, split.test, "ML10-analog")
    if benchmark_id == "ML45-analog":
        split = _catalog_split(10, 2)
        return _ml(split.train, split.test, "ML45-analog")
    if benchmark_id == "ML25":
        split = _mixed_split(seed)
        return _ml(split.train, split.test, "ML25")
    raise AssertionError("unreachable")
