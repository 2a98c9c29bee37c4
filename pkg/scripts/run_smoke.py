#!/usr/bin/env python3
"""Run one of the calibrated smoke-training recipes and print the outcome.

Recipes (see deskworld.smoke for the frozen hyperparameters):
  sac-reach       single-task SAC on reach; expect eval success ~1.0
  mtmhsac-trio    multi-head SAC on {reach, push, drawer-close}; expect mean >=0.6
  reward-compare  equal-budget trio runs under both reward versions; expect the
                  v1 terminal critic loss to dwarf the v2 one
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from deskworld.smoke import (
    mtmhsac_trio_recipe,
    reward_version_recipe,
    run_recipe,
    sac_reach_recipe,
    terminal_q_loss,
)


def _paths(out: Path | None, label: str):
    if out is None:
        return None, None
    run_dir = out / label
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir / "diagnostics.csv", run_dir / "checkpoint.npz"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--recipe",
        choices=("sac-reach", "mtmhsac-trio", "reward-compare"),
        default="sac-reach",
    )
    parser.add_argument("--steps", type=int, default=None, help="override the budget")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args()

    overrides = {} if args.steps is None else {"total_steps": args.steps}
    start = time.time()

    if args.recipe == "reward-compare":
        losses = {}
        for version in ("v2", "v1"):
            recipe = reward_version_recipe(version, seed=args.seed, **overrides)
            diag, ckpt = _paths(args.out, f"reward-compare-{version}")
            result, report = run_recipe(*recipe, diagnostics_path=diag, checkpoint_path=ckpt)
            losses[version] = terminal_q_loss(result)
            print(
                f"{version}: terminal q_loss {losses[version]:.4g}, "
                f"mean success {report.mean_success_rate:.3f}"
            )
        print(
            json.dumps(
                {
                    "v1_terminal_q_loss": losses["v1"],
                    "v2_terminal_q_loss": losses["v2"],
                    "v1_over_v2": losses["v1"] / losses["v2"],
                    "seconds": time.time() - start,
                },
                indent=2,
            )
        )
        return 0

    if args.recipe == "sac-reach":
        recipe = sac_reach_recipe(seed=args.seed, **overrides)
    else:
        recipe = mtmhsac_trio_recipe(seed=args.seed, **overrides)
    diag, ckpt = _paths(args.out, args.recipe)
    result, report = run_recipe(*recipe, diagnostics_path=diag, checkpoint_path=ckpt)
    print(
        json.dumps(
            {
                "recipe": args.recipe,
                "total_steps": result.total_steps,
                "success_rate_per_task": report.success_rate_per_task,
                "mean_success_rate": report.mean_success_rate,
                "seconds": time.time() - start,
            },
            indent=2,
        )
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
