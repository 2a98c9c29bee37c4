#!/usr/bin/env python3
"""Budgeted single-task training sweep that seeds mixed-difficulty benchmarks.

Runs the same small SAC recipe on every catalog task, evaluates each
trained policy on the standard 50-goal protocol, and freezes which tasks
cleared the solved threshold into src/deskworld/data/reference_results.json.
The packaged registry reads that file so MT25/ML25 construction is stable
across machines regardless of local hardware.
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from deskworld.env import EnvConfig
from deskworld.learn.training import TrainConfig
from deskworld.registry import TaskSet, task_names
from deskworld.smoke import run_recipe

DEFAULT_OUT = (
    Path(__file__).resolve().parents[1]
    / "src"
    / "deskworld"
    / "data"
    / "reference_results.json"
)


def sweep(steps: int, threshold: float, seed: int):
    rows = []
    for task in task_names():
        task_set = TaskSet(
            name=task, tasks=(task,), kind="multitask", variations_per_task=50, seed=seed
        )
        env_config = EnvConfig(horizon=150, variations_per_task=50)
        train_config = TrainConfig(
            algo="sac",
            total_steps=steps,
            warmup_steps=2_000,
            batch_size=128,
            hidden=(64, 64),
            lr=3e-4,
            gamma=0.9,
            diag_every=5_000,
            seed=seed,
        )
        start = time.time()
        _, report = run_recipe(task_set, env_config, train_config)
        rate = report.success_rate_per_task[task]
        rows.append(
            {"task": task, "success_rate": rate, "solved": bool(rate >= threshold)}
        )
        print(
            f"{task:18s} success {rate:5.2f} -> "
            f"{'solved' if rate >= threshold else 'unsolved'}  "
            f"[{time.time() - start:.0f}s]",
            flush=True,
        )
    return rows


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=25_000)
    parser.add_argument("--threshold", type=float, default=0.2)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = parser.parse_args()

    rows = sweep(args.steps, args.threshold, args.seed)
    solved = sum(r["solved"] for r in rows)
    doc = {
        "description": "Per-task outcome of the development smoke-training sweep "
        "used to seed mixed-difficulty benchmark construction. Regenerate with "
        "scripts/record_reference_results.py.",
        "protocol": "single-task soft actor-critic, v2 rewards, "
        f"{args.steps} steps, gamma 0.9, hidden (64, 64), batch 128, seed {args.seed}; "
        f"solved = 50-goal evaluation success rate >= {args.threshold}",
        "tasks": rows,
    }
    args.out.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"{solved}/{len(rows)} solved -> {args.out}")
    if not (4 <= solved <= len(rows) - 4):
        print(
            "warning: mixed-difficulty sets need >=4 solved and >=4 unsolved tasks; "
            "adjust --steps or --threshold"
        )
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
