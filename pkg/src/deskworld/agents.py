"""Observation-driven agents for the evaluation harness and CLI.

The evaluation protocols talk to agents purely through observations, so the
scripted experts get an adapter here that rebuilds the geometric state they
need from the 39-dim vector.  Attachment is not observable directly; it is
inferred from proximity + closure, which is exact on expert trajectories
(experts never squeeze an object against the workspace boundary, the one
case where the held offset could stretch).
"""

from __future__ import annotations

import numpy as np

from .catalog import get_task, load_catalog
from .env import SimState
from .experts import ScriptedPolicy

_IDENT = np.array([1.0, 0.0, 0.0, 0.0])


def state_from_observation(obs: np.ndarray, task_name: str, goal=None) -> SimState:
    """Pseudo-state for policy consumption; quaternion slots are identity
    (the simulator never rotates objects) and step is synthetic."""
    task = get_task(task_name)
    defaults = load_catalog().defaults
    ee = obs[0:3].copy()
    openness = float(obs[3])
    obj1 = obs[4:7].copy()
    attached = bool(
        task.graspable
        and openness < defaults["close_threshold"]
        and np.linalg.norm(ee - obj1) <= defaults["grasp_radius"]
    )
    return SimState(
        ee_pos=ee,
        gripper_openness=openness,
        obj1_pos=obj1,
        obj1_quat=_IDENT.copy(),
        obj2_pos=obs[11:14].copy(),
        obj2_quat=_IDENT.copy(),
        attached=attached,
        goal=obs[36:39].copy() if goal is None else np.asarray(goal, float),
        step=0,
    )


class RandomAgent:
    """Uniform actions; the adaptation hooks are deliberate no-ops."""

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def eval_action(self, observations):
        return self.rng.uniform(-1.0, 1.0, (len(observations), 4))

    adapt_action = eval_action

    def adapt(self, rollouts):
        pass


class ScriptedAgent:
    """Per-index scripted experts reading goals from the observation.

    Only meaningful in multitask mode; with hidden goals the reconstructed
    target collapses to the origin and the policy degrades gracefully.
    """

    def __init__(self, task_names, action_scale: float = 0.01):
        self.task_names = list(task_names)
        self.policies = [ScriptedPolicy(name, action_scale) for name in self.task_names]

    def eval_action(self, observations):
        actions = np.zeros((len(observations), 4))
        for i, obs in enumerate(observations):
            state = state_from_observation(obs, self.task_names[i])
            actions[i] = self.policies[i].action(state)
        return actions

    adapt_action = eval_action

    def adapt(self, rollouts):
        pass


class BlindCloserAgent:
    """Oracle adapter for goal-hidden evaluation of articulated tasks whose
    goal sits at a joint limit (drawer-close, window-close, button-press):
    walk to the handle, then shove the joint to its stop.  adapt() only
    flips a flag so tests can verify the hook fired."""

    def __init__(self, task_names, action_scale: float = 0.01):
        self.task_names = list(task_names)
        self.action_scale = action_scale
        self.adapted = False

    def adapt_action(self, observations):
        return np.zeros((len(observations), 4))

    def adapt(self, rollouts):
        self.adapted = True

    def eval_action(self, observations):
        actions = np.zeros((len(observations), 4))
        for i, obs in enumerate(observations):
            task = get_task(self.task_names[i])
            art = task.articulation
            if art is None:
                continue
            ee, handle = obs[0:3], obs[4:7]
            if np.linalg.norm(handle - ee) > 0.005:
                delta = handle - ee
            else:
                # aim past the goal-side joint stop; the clamp does the rest
                stop = 0.0 if art.q_goal_range[1] <= art.q_max / 2 else art.q_max
                target = handle + art.axis * (stop + (0.05 if stop else -0.05))
                delta = target - ee
            actions[i, :3] = np.clip(delta / self.action_scale, -1.0, 1.0)
        return actions
