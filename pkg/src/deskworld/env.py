"""Quasi-static tabletop manipulation environment.

A point end-effector moves by bounded position deltas inside a fixed
workspace box.  Free objects teleport with the gripper while held;
articulated objects (doors, drawers, windows, buttons) are one-dimensional
slides dragged by contact.  There are no dynamics: state is fully described
by poses, one grip scalar, and one attachment bit, which keeps every
trajectory exactly reproducible from (task, variation_index, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import TaskSpec, get_task, load_catalog
from .rewards import V1Memory, compute_reward_v1, compute_reward_v2

OBS_DIM = 39
ACTION_DIM = 4
FRAME_DIM = 18

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])

REWARD_VERSIONS = ("v1", "v2")
MODES = ("multitask", "meta")


class ProtocolError(RuntimeError):
    """step() called on an environment that needs a reset."""


@dataclass
class EnvConfig:
    reward_version: str = "v2"
    mode: str = "multitask"
    horizon: int = 500
    action_scale: float = 0.01
    success_threshold: float | None = None  # None -> per-task catalog value
    variations_per_task: int = 50
    gamma: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if self.reward_version not in REWARD_VERSIONS:
            raise ValueError(f"reward_version must be one of {REWARD_VERSIONS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.horizon <= 0 or self.action_scale <= 0:
            raise ValueError("horizon and action_scale must be positive")
        if self.variations_per_task <= 0:
            raise ValueError("variations_per_task must be positive")


@dataclass
class SimState:
    ee_pos: np.ndarray
    gripper_openness: float
    obj1_pos: np.ndarray
    obj1_quat: np.ndarray
    obj2_pos: np.ndarray
    obj2_quat: np.ndarray
    attached: bool
    goal: np.ndarray
    step: int

    def copy(self) -> "SimState":
        return SimState(
            ee_pos=self.ee_pos.copy(),
            gripper_openness=self.gripper_openness,
            obj1_pos=self.obj1_pos.copy(),
            obj1_quat=self.obj1_quat.copy(),
            obj2_pos=self.obj2_pos.copy(),
            obj2_quat=self.obj2_quat.copy(),
            attached=self.attached,
            goal=self.goal.copy(),
            step=self.step,
        )


@dataclass(frozen=True)
class VariationDraw:
    obj1_init: np.ndarray
    obj2_init: np.ndarray
    goal: np.ndarray
    articulation_base: np.ndarray | None
    q_init: float


def draw_variation(task: TaskSpec, variation_index: int, seed: int) -> VariationDraw:
    """Deterministic scene layout for one (task, variation, seed) triple.

    Draws are rejected (and fully redrawn) until the success target starts
    clearly outside the success region, so no variation is solved at reset.
    """
    cat = load_catalog()
    min_sep = task.success_threshold + cat.defaults["min_start_separation"]
    rng = np.random.default_rng([seed, task.index, variation_index])
    for _ in range(100):
        obj1 = np.zeros(3)
        obj2 = np.zeros(3)
        base = None
        q_init = 0.0
        if task.object_init is not None:
            obj1 = task.object_init.sample(rng)
        if task.obj2_init is not None:
            obj2 = task.obj2_init.sample(rng)
        if task.articulation is not None:
            art = task.articulation
            base = art.base_box.sample(rng)
            q_init = rng.uniform(*art.q_init_range)
            q_goal = rng.uniform(*art.q_goal_range)
            obj1 = base + art.axis * q_init
            goal = base + art.axis * q_goal
            target = obj1
        elif task.goal_mode == "obj2_offset":
            goal = obj2 + task.goal_offset
            target = obj1
        else:
            goal = task.goal_box.sample(rng)
            target = obj1 if task.object_count else cat.ee_start
        if np.linalg.norm(target - goal) >= min_sep:
            return VariationDraw(obj1, obj2, goal, base, q_init)
    raise RuntimeError(
        f"could not draw a valid variation for {task.name} index {variation_index}"
    )


def assemble_observation(frame: np.ndarray, prev_frame: np.ndarray, goal: np.ndarray, mode: str) -> np.ndarray:
    obs = np.zeros(OBS_DIM)
    obs[0:FRAME_DIM] = frame
    obs[FRAME_DIM : 2 * FRAME_DIM] = prev_frame
    if mode == "multitask":
        obs[2 * FRAME_DIM :] = goal
    return obs


def state_frame(state: SimState, task: TaskSpec) -> np.ndarray:
    frame = np.zeros(FRAME_DIM)
    frame[0:3] = state.ee_pos
    frame[3] = state.gripper_openness
    if task.object_count >= 1:
        frame[4:7] = state.obj1_pos
        frame[7:11] = state.obj1_quat
    if task.object_count >= 2:
        frame[11:14] = state.obj2_pos
        frame[14:18] = state.obj2_quat
    return frame


class ManipulationEnv:
    observation_dim = OBS_DIM
    action_dim = ACTION_DIM

    def __init__(self, task: TaskSpec | str, config: EnvConfig | None = None):
        self.task = get_task(task) if isinstance(task, str) else task
        self.config = config if config is not None else EnvConfig()
        cat = load_catalog()
        self._ws_low = cat.workspace.low
        self._ws_high = cat.workspace.high
        self._obj_low = self._ws_low + np.array([0.0, 0.0, cat.defaults["object_z"]])
        self._ee_start = cat.ee_start
        self._defaults = cat.defaults
        self._state: SimState | None = None
        self._last_frame: np.ndarray | None = None
        self._v1_memory = V1Memory()
        self._articulation_base: np.ndarray | None = None
        self._q = 0.0
        self._needs_reset = True
        self.variation_index: int | None = None

    # -- protocol -----------------------------------------------------------

    def reset(self, variation_index: int) -> np.ndarray:
        if not 0 <= variation_index < self.config.variations_per_task:
            raise ValueError(
                f"variation_index {variation_index} outside "
                f"[0, {self.config.variations_per_task})"
            )
        draw = draw_variation(self.task, variation_index, self.config.seed)
        self.variation_index = variation_index
        self._articulation_base = draw.articulation_base
        self._q = draw.q_init
        # openness 0.5 is the value a zero action commands, so an all-zero
        # action from reset is a true no-op on the state
        self._state = SimState(
            ee_pos=self._ee_start.copy(),
            gripper_openness=0.5,
            obj1_pos=draw.obj1_init.copy(),
            obj1_quat=IDENTITY_QUAT.copy(),
            obj2_pos=draw.obj2_init.copy(),
            obj2_quat=IDENTITY_QUAT.copy(),
            attached=False,
            goal=draw.goal.copy(),
            step=0,
        )
        self._v1_memory = V1Memory()
        self._needs_reset = False
        frame = state_frame(self._state, self.task)
        self._last_frame = frame
        return assemble_observation(frame, frame, self._state.goal, self.config.mode)

    def step(self, action):
        if self._needs_reset or self._state is None:
            raise ProtocolError("call reset() before step()")
        a = np.clip(np.asarray(action, dtype=float).reshape(ACTION_DIM), -1.0, 1.0)
        state = self._state
        task = self.task

        old_ee = state.ee_pos
        new_ee = np.clip(
            old_ee + self.config.action_scale * a[:3], self._ws_low, self._ws_high
        )
        openness = (1.0 - a[3]) / 2.0
        delta = new_ee - old_ee

        if task.family == "free":
            attached = state.attached
            if attached and openness > self._defaults["open_threshold"]:
                attached = False
            if attached:
                state.obj1_pos = np.clip(
                    state.obj1_pos + delta, self._obj_low, self._ws_high
                )
            elif (
                task.graspable
                and openness < self._defaults["close_threshold"]
                and np.linalg.norm(new_ee - state.obj1_pos) <= self._defaults["grasp_radius"]
            ):
                attached = True
            state.attached = attached
        elif task.family == "articulated":
            art = task.articulation
            if np.linalg.norm(old_ee - state.obj1_pos) <= self._defaults["contact_radius"]:
                self._q = float(np.clip(self._q + delta @ art.axis, 0.0, art.q_max))
                state.obj1_pos = self._articulation_base + art.axis * self._q

        state.ee_pos = new_ee
        state.gripper_openness = openness
        state.step += 1

        if self.config.reward_version == "v2":
            reward, unscaled = compute_reward_v2(state, task)
            components = {"satisfaction": unscaled}
        else:
            reward, self._v1_memory = compute_reward_v1(state, self._v1_memory, task)
            components = {"grasp_latched": self._v1_memory.grasp_latched}

        success = self.check_success()
        truncated = state.step >= self.config.horizon
        if truncated:
            self._needs_reset = True

        prev_frame = self._last_frame
        frame = state_frame(state, task)
        self._last_frame = frame
        obs = assemble_observation(frame, prev_frame, state.goal, self.config.mode)
        info = {
            "success": success,
            "task": task.name,
            "variation_index": self.variation_index,
            "unscaled_components": components,
        }
        return obs, float(reward), False, truncated, info

    # -- queries ------------------------------------------------------------

    @property
    def state(self) -> SimState:
        if self._state is None:
            raise ProtocolError("environment has not been reset")
        return self._state.copy()

    def target_point(self, state: SimState | None = None) -> np.ndarray:
        s = state if state is not None else self._state
        if self.task.family == "reach":
            return s.ee_pos
        return s.obj1_pos

    def check_success(self, state: SimState | None = None) -> bool:
        s = state if state is not None else self._state
        if s is None:
            raise ProtocolError("environment has not been reset")
        threshold = (
            self.config.success_threshold
            if self.config.success_threshold is not None
            else self.task.success_threshold
        )
        return bool(np.linalg.norm(self.target_point(s) - s.goal) <= threshold)


def make_env(task_name: str, config: EnvConfig | None = None) -> ManipulationEnv:
    return ManipulationEnv(task_name, config)
