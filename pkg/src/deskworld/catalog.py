"""Task catalog: geometry, thresholds, and reward definitions for all tasks.

Loaded once from the packaged ``data/catalog.json`` (regenerate with
``scripts/build_catalog.py``). Everything downstream — environments, scripted
policies, benchmark registries — resolves task names through this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .fuzzy import RewardTree

CATALOG_VERSION = 1


class UnknownTaskError(KeyError):
    """Raised when a task name is not in the catalog."""


@dataclass(frozen=True)
class Box:
    low: np.ndarray
    high: np.ndarray

    @staticmethod
    def from_json(doc) -> "Box":
        low = np.asarray(doc["low"], dtype=float)
        high = np.asarray(doc["high"], dtype=float)
        if low.shape != high.shape or np.any(low > high):
            raise ValueError(f"malformed box: {doc}")
        return Box(low, high)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high)

    def contains(self, point, atol=1e-9) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.low - atol) and np.all(p <= self.high + atol))


@dataclass(frozen=True)
class Articulation:
    """A one-degree-of-freedom slide: handle = base + axis * q, q in [0, q_max]."""

    axis: np.ndarray
    base_box: Box
    q_max: float
    q_init_range: tuple[float, float]
    q_goal_range: tuple[float, float]

    @staticmethod
    def from_json(doc) -> "Articulation":
        axis = np.asarray(doc["axis"], dtype=float)
        norm = float(np.linalg.norm(axis))
        if not np.isclose(norm, 1.0):
            raise ValueError(f"articulation axis must be unit length, got norm {norm}")
        return Articulation(
            axis=axis,
            base_box=Box(
                np.asarray(doc["base_low"], dtype=float),
                np.asarray(doc["base_high"], dtype=float),
            ),
            q_max=float(doc["q_max"]),
            q_init_range=tuple(doc["q_init_range"]),
            q_goal_range=tuple(doc["q_goal_range"]),
        )


@dataclass(frozen=True)
class TaskSpec:
    name: str
    index: int
    family: str  # "reach" | "free" | "articulated"
    object_count: int
    graspable: bool
    success_threshold: float
    goal_mode: str  # "box" | "obj2_offset" | "articulation"
    goal_box: Box | None
    goal_offset: np.ndarray | None
    object_init: Box | None
    obj2_init: Box | None
    articulation: Articulation | None
    carry: dict = field(default_factory=dict)
    wall: dict | None = None
    v1_params: dict = field(default_factory=dict)
    v2_tree: RewardTree | None = None


@dataclass(frozen=True)
class Catalog:
    version: int
    workspace: Box
    ee_start: np.ndarray
    defaults: dict
    tasks: tuple[TaskSpec, ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tasks)

    def task(self, name: str) -> TaskSpec:
        for t in self.tasks:
            if t.name == name:
                return t
        raise UnknownTaskError(name)


def _task_from_json(doc, index, defaults) -> TaskSpec:
    goal_doc = doc.get("goal")
    art = doc.get("articulation")
    if art is not None:
        goal_mode = "articulation"
        goal_box = None
        goal_offset = None
    elif goal_doc["mode"] == "box":
        goal_mode = "box"
        goal_box = Box.from_json(goal_doc)
        goal_offset = None
    elif goal_doc["mode"] == "obj2_offset":
        goal_mode = "obj2_offset"
        goal_box = None
        goal_offset = np.asarray(goal_doc["offset"], dtype=float)
    else:
        raise ValueError(f"unknown goal mode {goal_doc['mode']!r}")

    return TaskSpec(
        name=doc["name"],
        index=index,
        family=doc["family"],
        object_count=int(doc["object_count"]),
        graspable=bool(doc["graspable"]),
        success_threshold=float(doc.get("success_threshold", defaults["success_threshold"])),
        goal_mode=goal_mode,
        goal_box=goal_box,
        goal_offset=goal_offset,
        object_init=Box.from_json(doc["object_init"]) if doc.get("object_init") else None,
        obj2_init=Box.from_json(doc["obj2_init"]) if doc.get("obj2_init") else None,
        articulation=Articulation.from_json(art) if art else None,
        carry=doc.get("carry", {}),
        wall=doc.get("wall"),
        v1_params=doc["v1"],
        v2_tree=RewardTree.from_json(doc["v2_tree"]),
    )


@lru_cache(maxsize=1)
def load_catalog() -> Catalog:
    raw = resources.files("deskworld").joinpath("data/catalog.json").read_text()
    doc = json.loads(raw)
    if doc["version"] != CATALOG_VERSION:
        raise ValueError(
            f"catalog version {doc['version']} != expected {CATALOG_VERSION}"
        )
    defaults = doc["defaults"]
    tasks = tuple(
        _task_from_json(t, i, defaults) for i, t in enumerate(doc["tasks"])
    )
    names = [t.name for t in tasks]
    if len(set(names)) != len(names):
        raise ValueError("duplicate task names in catalog")
    return Catalog(
        version=doc["version"],
        workspace=Box.from_json(doc["workspace"]),
        ee_start=np.asarray(doc["ee_start"], dtype=float),
        defaults=defaults,
        tasks=tasks,
    )


def task_names() -> tuple[str, ...]:
    return load_catalog().names


def get_task(name: str) -> TaskSpec:
    return load_catalog().task(name)
