"""Scripted expert policies.

One stage machine per task family, driven purely by the current state (the
stage is re-derived every step, so the policies are memoryless and safe to
run from any reachable state).  Experts exist to (a) prove every variation
is solvable inside the horizon and (b) generate reference reward traces.
"""

from __future__ import annotations

import numpy as np

from .catalog import TaskSpec, get_task, load_catalog
from .env import SimState

OPEN = -1.0  # action[3] -> gripper openness 1
CLOSE = 1.0  # action[3] -> gripper openness 0
NEUTRAL = 0.0


class ScriptedPolicy:
    def __init__(self, task: TaskSpec | str, action_scale: float = 0.01):
        self.task = get_task(task) if isinstance(task, str) else task
        self.action_scale = action_scale
        defaults = load_catalog().defaults
        self.grasp_radius = defaults["grasp_radius"]
        self.contact_radius = defaults["contact_radius"]
        self.hover_height = self.task.v1_params.get("hover_height", 0.1)

    # -- public -------------------------------------------------------------

    def action(self, state: SimState) -> np.ndarray:
        delta, grip = self._plan(state)[1:]
        xyz = np.clip(delta / self.action_scale, -1.0, 1.0)
        return np.concatenate([xyz, [grip]])

    def stage(self, state: SimState) -> str:
        return self._plan(state)[0]

    # -- stage machines -----------------------------------------------------

    def _plan(self, state: SimState):
        """Returns (stage_name, desired_ee_delta, grip_command)."""
        if self.task.family == "reach":
            return "reach", state.goal - state.ee_pos, NEUTRAL
        if self.task.family == "articulated":
            return self._plan_articulated(state)
        return self._plan_free(state)

    def _plan_articulated(self, state: SimState):
        handle = state.obj1_pos
        if np.linalg.norm(handle - state.goal) <= 0.4 * self.task.success_threshold:
            return "hold", np.zeros(3), NEUTRAL
        if np.linalg.norm(state.ee_pos - handle) > 0.005:
            return "approach", handle - state.ee_pos, NEUTRAL
        return "drag", state.goal - state.ee_pos, NEUTRAL

    def _plan_free(self, state: SimState):
        obj = state.obj1_pos
        if not state.attached:
            d_xy = np.linalg.norm((state.ee_pos - obj)[:2])
            if d_xy > 0.01:
                hover = obj + np.array([0.0, 0.0, self.hover_height])
                return "hover", hover - state.ee_pos, OPEN
            if np.linalg.norm(state.ee_pos - obj) > 0.5 * self.grasp_radius:
                return "descend", obj - state.ee_pos, OPEN
            return "grasp", np.zeros(3), CLOSE

        # Holding the object: the object tracks the gripper, so command the
        # displacement we want the object to make.
        style = self.task.carry.get("style", "slide")
        goal = state.goal
        if style == "slide":
            return "transport", goal - obj, CLOSE
        if style == "insert":
            offset = np.asarray(self.task.carry["approach_offset"])
            axis = offset / np.linalg.norm(offset)
            d = obj - goal
            lateral = d - (d @ axis) * axis
            if np.linalg.norm(lateral) > 0.005:
                return "align", (goal + offset) - obj, CLOSE
            return "insert", goal - obj, CLOSE
        # style == "lift"
        clear = self.task.carry.get("clear_height")
        if clear is not None:
            wall_y = state.obj2_pos[1]
            past_wall = obj[1] > wall_y + self.task.wall["half_thickness"] + 0.02
            if not past_wall:
                if obj[2] < clear - 0.005:
                    return "lift", np.array([0.0, 0.0, clear - obj[2]]), CLOSE
                level = np.array([goal[0] - obj[0], goal[1] - obj[1], 0.0])
                return "transport", level, CLOSE
            return "lower", goal - obj, CLOSE
        if abs(obj[2] - goal[2]) > 0.005 and np.linalg.norm((obj - goal)[:2]) > 0.02:
            return "lift", np.array([0.0, 0.0, goal[2] - obj[2]]), CLOSE
        return "transport", goal - obj, CLOSE


def rollout_expert(env, variation_index: int, stop_on_success: bool = False):
    """Run the scripted expert for one episode; returns a trace dict."""
    policy = ScriptedPolicy(env.task, env.config.action_scale)
    obs = env.reset(variation_index)
    rewards, stages, successes = [], [], []
    observations = [obs]
    while True:
        state = env.state
        stages.append(policy.stage(state))
        obs, reward, _, truncated, info = env.step(policy.action(state))
        observations.append(obs)
        rewards.append(reward)
        successes.append(info["success"])
        if truncated or (stop_on_success and info["success"]):
            break
    return {
        "rewards": np.asarray(rewards),
        "stages": stages,
        "successes": np.asarray(successes, dtype=bool),
        "observations": np.asarray(observations),
        "solved": bool(np.any(successes)),
    }
