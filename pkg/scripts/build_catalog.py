"""Regenerate src/deskworld/data/catalog.json.

The catalog is the single source of truth for task geometry, success
thresholds, V1 shaping parameters, and the serialized V2 constraint trees.
Run this after editing anything below; the emitted file is committed.
"""

import json
from pathlib import Path

from deskworld.fuzzy import (
    ConjunctionNode,
    DisjunctionNode,
    RewardTree,
    ToleranceNode,
    keep_out_band,
    reach_band,
)

GRASP_RADIUS = 0.04
PLACE_BAND = 1e-9  # effectively-exact placement band so a settled expert saturates
WALL_TOP = 0.20
WALL_HALF_THICKNESS = 0.02

DEFAULTS = {
    "success_threshold": 0.05,
    "grasp_radius": GRASP_RADIUS,
    "close_threshold": 0.35,
    "open_threshold": 0.65,
    "contact_radius": 0.05,
    # reset draws are rejected until the target sits at least
    # success_threshold + this margin away from the goal
    "min_start_separation": 0.02,
    "object_z": 0.02,
}

WORKSPACE = {"low": [-0.6, 0.2, 0.0], "high": [0.6, 1.0, 0.6]}


def grasped():
    # 1.0 while the object is held, 0.1 otherwise: the "bottleneck" indicator
    return ToleranceNode("detached", reach_band(upper=0.0, margin=1.0))


def reach_progress(margin=0.4):
    return ToleranceNode("ee_to_obj", reach_band(upper=GRASP_RADIUS, margin=margin))


def place(margin):
    return ToleranceNode("obj_to_goal", reach_band(upper=PLACE_BAND, margin=margin))


def transport_tree(place_margin):
    """Shared push-style tree: make progress toward the object, then hold it
    and move it to the goal."""
    return RewardTree(
        DisjunctionNode(
            [
                reach_progress(),
                ConjunctionNode([grasped(), place(place_margin)]),
            ],
            [0.25, 0.75],
        )
    )


def pick_place_tree(place_margin, extra=None):
    conj_children = [
        ToleranceNode("ee_to_obj", reach_band(upper=GRASP_RADIUS, margin=0.3)),
        grasped(),
        place(place_margin),
    ]
    if extra is not None:
        conj_children.append(extra)
    return RewardTree(
        DisjunctionNode(
            [ConjunctionNode(conj_children), reach_progress()],
            [0.75, 0.25],
        )
    )


def articulated_tree(travel_margin):
    return RewardTree(
        DisjunctionNode(
            [
                ToleranceNode("ee_to_obj", reach_band(upper=0.01, margin=0.3)),
                ToleranceNode("obj_to_goal", reach_band(upper=PLACE_BAND, margin=travel_margin)),
            ],
            [0.3, 0.7],
        )
    )


def articulation(axis, base_low, base_high, q_max, q_init, q_goal):
    return {
        "axis": axis,
        "base_low": base_low,
        "base_high": base_high,
        "q_max": q_max,
        "q_init_range": q_init,
        "q_goal_range": q_goal,
    }


def v1(family, **overrides):
    params = {
        "family": family,
        "peak": 1200.0,
        "bonus_radius": 0.1,
        "hover_height": 0.1,
    }
    params.update(overrides)
    return params


TASKS = [
    {
        "name": "reach",
        "family": "reach",
        "object_count": 0,
        "graspable": False,
        "goal": {"mode": "box", "low": [-0.35, 0.35, 0.1], "high": [0.35, 0.85, 0.35]},
        "v1": v1("reach"),
        "v2_tree": RewardTree(
            ToleranceNode("ee_to_goal", reach_band(upper=0.0, margin=0.25))
        ),
    },
    {
        "name": "push",
        "family": "free",
        "object_count": 1,
        "graspable": True,
        "object_init": {"low": [-0.15, 0.45, 0.02], "high": [0.15, 0.65, 0.02]},
        "goal": {"mode": "box", "low": [-0.25, 0.65, 0.02], "high": [0.25, 0.85, 0.02]},
        "carry": {"style": "slide"},
        "v1": v1("manipulate", hover_height=0.08),
        "v2_tree": transport_tree(place_margin=0.3),
    },
    {
        "name": "pick-place",
        "family": "free",
        "object_count": 1,
        "graspable": True,
        "object_init": {"low": [-0.15, 0.45, 0.02], "high": [0.15, 0.65, 0.02]},
        "goal": {"mode": "box", "low": [-0.25, 0.55, 0.15], "high": [0.25, 0.8, 0.35]},
        "carry": {"style": "lift"},
        "v1": v1("manipulate"),
        "v2_tree": pick_place_tree(place_margin=0.3),
    },
    {
        "name": "door-open",
        "family": "articulated",
        "object_count": 1,
        "graspable": False,
        "articulation": articulation(
            axis=[1.0, 0.0, 0.0],
            base_low=[-0.3, 0.7, 0.15],
            base_high=[-0.1, 0.85, 0.3],
            q_max=0.4,
            q_init=[0.0, 0.0],
            q_goal=[0.25, 0.35],
        ),
        "v1": v1("articulated"),
        "v2_tree": articulated_tree(travel_margin=0.3),
    },
    {
        "name": "drawer-open",
        "family": "articulated",
        "object_count": 1,
        "graspable": False,
        "articulation": articulation(
            axis=[0.0, -1.0, 0.0],
            base_low=[-0.2, 0.75, 0.08],
            base_high=[0.2, 0.85, 0.12],
            q_max=0.25,
            q_init=[0.0, 0.0],
            q_goal=[0.15, 0.22],
        ),
        "v1": v1("articulated"),
        "v2_tree": articulated_tree(travel_margin=0.2),
    },
    {
        "name": "drawer-close",
        "family": "articulated",
        "object_count": 1,
        "graspable": False,
        "articulation": articulation(
            axis=[0.0, -1.0, 0.0],
            base_low=[-0.2, 0.75, 0.08],
            base_high=[0.2, 0.85, 0.12],
            q_max=0.25,
            q_init=[0.15, 0.22],
            q_goal=[0.0, 0.0],
        ),
        "v1": v1("articulated"),
        "v2_tree": articulated_tree(travel_margin=0.2),
    },
    {
        "name": "button-press",
        "family": "articulated",
        "object_count": 1,
        "graspable": False,
        "success_threshold": 0.02,
        "articulation": articulation(
            axis=[0.0, 0.0, -1.0],
            base_low=[-0.25, 0.5, 0.12],
            base_high=[0.25, 0.75, 0.2],
            q_max=0.06,
            q_init=[0.0, 0.0],
            q_goal=[0.04, 0.05],
        ),
        "v1": v1("articulated", bonus_radius=0.05),
        "v2_tree": articulated_tree(travel_margin=0.06),
    },
    {
        "name": "peg-insert-side",
        "family": "free",
        "object_count": 2,
        "graspable": True,
        "object_init": {"low": [0.0, 0.45, 0.02], "high": [0.2, 0.6, 0.02]},
        "obj2_init": {"low": [-0.35, 0.6, 0.08], "high": [-0.25, 0.75, 0.08]},
        "goal": {"mode": "obj2_offset", "offset": [0.08, 0.0, 0.0]},
        "carry": {"style": "insert", "approach_offset": [0.12, 0.0, 0.0]},
        "v1": v1("manipulate"),
        "v2_tree": pick_place_tree(
            place_margin=0.3,
            extra=ToleranceNode("lateral_offset", reach_band(upper=0.01, margin=0.1)),
        ),
    },
    {
        "name": "window-open",
        "family": "articulated",
        "object_count": 1,
        "graspable": False,
        "articulation": articulation(
            axis=[1.0, 0.0, 0.0],
            base_low=[-0.15, 0.8, 0.25],
            base_high=[0.0, 0.9, 0.35],
            q_max=0.3,
            q_init=[0.0, 0.0],
            q_goal=[0.15, 0.25],
        ),
        "v1": v1("articulated"),
        "v2_tree": articulated_tree(travel_margin=0.25),
    },
    {
        "name": "window-close",
        "family": "articulated",
        "object_count": 1,
        "graspable": False,
        "articulation": articulation(
            axis=[1.0, 0.0, 0.0],
            base_low=[-0.15, 0.8, 0.25],
            base_high=[0.0, 0.9, 0.35],
            q_max=0.3,
            q_init=[0.15, 0.25],
            q_goal=[0.0, 0.0],
        ),
        "v1": v1("articulated"),
        "v2_tree": articulated_tree(travel_margin=0.25),
    },
    {
        "name": "coffee-push",
        "family": "free",
        "object_count": 2,
        "graspable": True,
        "object_init": {"low": [-0.1, 0.45, 0.02], "high": [0.1, 0.55, 0.02]},
        "obj2_init": {"low": [-0.05, 0.75, 0.06], "high": [0.05, 0.85, 0.06]},
        "goal": {"mode": "obj2_offset", "offset": [0.0, -0.08, -0.04]},
        "carry": {"style": "slide"},
        "v1": v1("manipulate", hover_height=0.08),
        "v2_tree": transport_tree(place_margin=0.3),
    },
    {
        "name": "pick-place-wall",
        "family": "free",
        "object_count": 2,
        "graspable": True,
        "object_init": {"low": [-0.2, 0.4, 0.02], "high": [0.2, 0.5, 0.02]},
        "obj2_init": {"low": [-0.1, 0.6, 0.1], "high": [0.1, 0.65, 0.1]},
        "goal": {"mode": "box", "low": [-0.2, 0.72, 0.05], "high": [0.2, 0.85, 0.15]},
        "carry": {"style": "lift", "clear_height": WALL_TOP + 0.08},
        "wall": {"top": WALL_TOP, "half_thickness": WALL_HALF_THICKNESS},
        "v1": v1("manipulate", safe_height=WALL_TOP + 0.08),
        "v2_tree": pick_place_tree(
            place_margin=0.3,
            extra=ToleranceNode("wall_clearance", keep_out_band(radius=0.03, margin=0.05)),
        ),
    },
]


def main():
    tasks = []
    for entry in TASKS:
        doc = dict(entry)
        doc["v2_tree"] = entry["v2_tree"].to_json()
        tasks.append(doc)
    catalog = {
        "version": 1,
        "workspace": WORKSPACE,
        "defaults": DEFAULTS,
        "ee_start": [0.0, 0.5, 0.25],
        "tasks": tasks,
    }
    out = Path(__file__).resolve().parents[1] / "src" / "deskworld" / "data" / "catalog.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(catalog, indent=2) + "\n")
    print(f"wrote {out} ({len(tasks)} tasks)")


if __name__ == "__main__":
    main()
