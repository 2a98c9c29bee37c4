"""Reward computation for both reward generations.

The v2 path is stateless: geometric features feed the task's constraint tree
and come back as a satisfaction degree scaled into (0, 10].  The v1 path is
the older staged shaping: negative distance terms whose meaning changes as
the episode progresses, plus a large proximity bonus near the goal, and a
grasp latch that makes the reward depend on episode history.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import TaskSpec, load_catalog
from .fuzzy import REWARD_SCALE, scale_reward


def _dist(a, b):
    return np.linalg.norm(np.asarray(a, float) - np.asarray(b, float), axis=-1)


def wall_distance(ee, wall_center, wall) -> np.ndarray:
    """Distance from the end-effector to a wall slab spanning the x axis,
    centered at wall_center in y, reaching from the table up to wall['top']."""
    ee = np.asarray(ee, float)
    wall_center = np.asarray(wall_center, float)
    dy = np.maximum(np.abs(ee[..., 1] - wall_center[..., 1]) - wall["half_thickness"], 0.0)
    dz = np.maximum(ee[..., 2] - wall["top"], 0.0)
    return np.sqrt(dy * dy + dz * dz)


def compute_features(task: TaskSpec, *, ee, openness, obj1, obj2, goal, attached):
    """Geometric features consumed by the task's v2 tree.

    Accepts single states (shape (3,) vectors) or batches (shape (n, 3));
    every returned feature broadcasts accordingly.
    """
    features = {}
    if task.family == "reach":
        features["ee_to_goal"] = _dist(ee, goal)
        return features

    features["ee_to_obj"] = _dist(ee, obj1)
    features["obj_to_goal"] = _dist(obj1, goal)
    if task.graspable:
        features["detached"] = 1.0 - np.asarray(attached, dtype=float)
    if task.name == "peg-insert-side":
        axis = task.goal_offset / np.linalg.norm(task.goal_offset)
        d = np.asarray(obj1, float) - np.asarray(goal, float)
        along = np.sum(d * axis, axis=-1)
        lat_sq = np.sum(d * d, axis=-1) - along * along
        features["lateral_offset"] = np.sqrt(np.maximum(lat_sq, 0.0))
    if task.wall is not None:
        features["wall_clearance"] = wall_distance(ee, obj2, task.wall)
    return features


def compute_reward_v2(state, task: TaskSpec):
    """Returns (reward, unscaled_satisfaction); reward lies in (0, 10]."""
    features = compute_features(
        task,
        ee=state.ee_pos,
        openness=state.gripper_openness,
        obj1=state.obj1_pos,
        obj2=state.obj2_pos,
        goal=state.goal,
        attached=state.attached,
    )
    unscaled = task.v2_tree.unscaled(features)
    return scale_reward(unscaled), unscaled


@dataclass
class V1Memory:
    """Episode memory for the staged reward: once a grasp has happened the
    reward switches to the post-grasp stages for the rest of the episode,
    even if the object is dropped."""

    grasp_latched: bool = False


def compute_reward_v1(state, memory: V1Memory, task: TaskSpec):
    """Staged shaping reward.  Pure in (state, memory): evaluating the same
    pair twice gives the same reward and the same successor memory."""
    p = task.v1_params
    latched = memory.grasp_latched or bool(state.attached)
    new_memory = V1Memory(grasp_latched=latched)

    if task.family == "reach":
        final_d = float(_dist(state.ee_pos, state.goal))
        shaping = -final_d
        bonus_armed = True
    elif task.family == "articulated":
        d_handle = float(_dist(state.ee_pos, state.obj1_pos))
        final_d = float(_dist(state.obj1_pos, state.goal))
        shaping = -(d_handle + final_d)
        bonus_armed = True
    else:
        final_d = float(_dist(state.obj1_pos, state.goal))
        if not latched:
            hover = np.asarray(state.obj1_pos, float) + np.array([0.0, 0.0, p["hover_height"]])
            d_xy = float(np.linalg.norm((state.ee_pos - state.obj1_pos)[:2]))
            if d_xy > 0.02:
                approach = float(_dist(state.ee_pos, hover))
            else:
                approach = float(_dist(state.ee_pos, state.obj1_pos))
            shaping = -(approach + final_d)
        else:
            shaping = -final_d
            safe = p.get("safe_height")
            if safe is not None and state.obj2_pos is not None:
                near_side = state.obj1_pos[1] < state.obj2_pos[1]
                if near_side and state.ee_pos[2] < safe:
                    shaping -= safe - float(state.ee_pos[2])
        bonus_armed = latched

    bonus = 0.0
    if bonus_armed and final_d < p["bonus_radius"]:
        bonus = p["peak"] * (1.0 - final_d / p["bonus_radius"])
    return shaping + bonus, new_memory


def sample_reachable_states(task: TaskSpec, n: int, rng: np.random.Generator):
    """Random physically reachable (state, goal) batches, as feature dicts.

    Used for bulk range checks of the v2 reward: every sampled state must map
    into (0, 10] after scaling.
    """
    cat = load_catalog()
    ws = cat.workspace
    defaults = cat.defaults

    ee = rng.uniform(ws.low, ws.high, size=(n, 3))
    openness = rng.uniform(0.0, 1.0, size=n)
    attached = np.zeros(n, dtype=bool)

    if task.family == "reach":
        goal = rng.uniform(task.goal_box.low, task.goal_box.high, size=(n, 3))
        obj1 = np.zeros((n, 3))
        obj2 = np.zeros((n, 3))
    elif task.family == "articulated":
        art = task.articulation
        base = rng.uniform(art.base_box.low, art.base_box.high, size=(n, 3))
        q = rng.uniform(0.0, art.q_max, size=(n, 1))
        q_goal = rng.uniform(*art.q_goal_range, size=(n, 1))
        obj1 = base + art.axis * q
        goal = base + art.axis * q_goal
        obj2 = np.zeros((n, 3))
    else:
        if task.graspable:
            attached = (rng.random(n) < 0.3) & (openness < defaults["open_threshold"])
        offset = rng.normal(size=(n, 3))
        offset *= (
            defaults["grasp_radius"]
            * rng.random((n, 1)) ** (1 / 3)
            / np.linalg.norm(offset, axis=1, keepdims=True)
        )
        free_pos = rng.uniform(
            ws.low + np.array([0.0, 0.0, defaults["object_z"]]), ws.high, size=(n, 3)
        )
        obj1 = np.where(attached[:, None], ee + offset, free_pos)
        if task.obj2_init is not None:
            obj2 = rng.uniform(task.obj2_init.low, task.obj2_init.high, size=(n, 3))
        else:
            obj2 = np.zeros((n, 3))
        if task.goal_mode == "obj2_offset":
            goal = obj2 + task.goal_offset
        else:
            goal = rng.uniform(task.goal_box.low, task.goal_box.high, size=(n, 3))

    return compute_features(
        task, ee=ee, openness=openness, obj1=obj1, obj2=obj2, goal=goal, attached=attached
    )


def batched_v2_rewards(task: TaskSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    features = sample_reachable_states(task, n, rng)
    return REWARD_SCALE * task.v2_tree.unscaled(features)
