"""Command-line interface: list, reward-trace, evaluate, train, bench, aggregate.

Every command is deterministic for a fixed flag set (bench additionally
reports wall-clock rates).  Output formats are CSV and JSON only.

Exit codes: 0 success, 2 validation error (unknown names, bad flags,
inconsistent inputs), 3 runtime error (I/O failures, training blow-ups).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from deskworld.catalog import CATALOG_VERSION, UnknownTaskError, get_task, load_catalog
from deskworld.env import EnvConfig, ManipulationEnv, ProtocolError
from deskworld.evaluation import (
    CSV_COLUMNS,
    evaluate_metalearning,
    evaluate_multitask,
    iqm,
    read_csv,
    stratified_bootstrap_ci,
    write_csv,
)
from deskworld.experts import rollout_expert
from deskworld.agents import RandomAgent, ScriptedAgent
from deskworld.learn.errors import ParameterError, TrainingError
from deskworld.learn.training import (
    ALGORITHMS,
    LearnedAgent,
    TrainConfig,
    agent_from_checkpoint,
    train,
)
from deskworld.registry import (
    BENCHMARK_IDS,
    BenchmarkLookupError,
    TaskSetError,
    make_benchmark,
)
from deskworld.vector import make_vector_env

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

TRACE_COLUMNS = ("step", "reward", "success")
AGGREGATE_COLUMNS = (
    "benchmark",
    "reward_version",
    "algorithm",
    "seeds",
    "iqm_success",
    "ci_low",
    "ci_high",
)

_VALIDATION_ERRORS = (
    BenchmarkLookupError,
    TaskSetError,
    UnknownTaskError,
    ParameterError,
    ProtocolError,
    ValueError,
)

__all__ = [
    "EXIT_OK",
    "EXIT_VALIDATION",
    "EXIT_RUNTIME",
    "TRACE_COLUMNS",
    "AGGREGATE_COLUMNS",
    "build_parser",
    "main",
]


def _parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"seeds must be comma-separated integers, got {text!r}") from exc
    if not seeds:
        raise ValueError("need at least one seed")
    return seeds


def _parse_hidden(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise ValueError(f"hidden sizes must be comma-separated integers, got {text!r}") from exc
    if not sizes:
        raise ValueError("need at least one hidden size")
    return sizes


def _write_or_print(payload: str, out):
    if out is None:
        print(payload)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(payload)


# --------------------------------------------------------------------- commands


def cmd_list(args) -> int:
    catalog = load_catalog()
    tasks = []
    for name in catalog.names:
        task = catalog.task(name)
        tasks.append(
            {
                "name": task.name,
                "index": task.index,
                "family": task.family,
                "object_count": task.object_count,
                "graspable": task.graspable,
                "articulated": task.articulation is not None,
                "success_threshold": task.success_threshold,
            }
        )
    payload = json.dumps(
        {
            "catalog_version": CATALOG_VERSION,
            "tasks": tasks,
            "benchmarks": list(BENCHMARK_IDS),
            "reward_versions": ["v1", "v2"],
            "algorithms": [*ALGORITHMS, "scripted", "random"],
        },
        indent=2,
    )
    _write_or_print(payload, args.out)
    return EXIT_OK


def cmd_reward_trace(args) -> int:
    get_task(args.task)  # unknown task -> lookup error before any work
    config = EnvConfig(
        reward_version=args.reward_version,
        seed=args.seed,
        variations_per_task=max(args.variation + 1, EnvConfig().variations_per_task),
    )
    env = ManipulationEnv(args.task, config)
    trace = rollout_expert(env, args.variation)
    lines = [",".join(TRACE_COLUMNS)]
    for i, (reward, success) in enumerate(zip(trace["rewards"], trace["successes"])):
        lines.append(f"{i + 1},{float(reward)!r},{int(success)}")
    _write_or_print("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _benchmark_env_names(args):
    if args.env is None:
        return None
    return [part for part in args.env.split(",") if part]


def _agent_for(algo, vec, seed, checkpoint):
    tasks = vec.task_set.tasks
    if algo == "scripted":
        return ScriptedAgent(tasks)
    if algo == "random":
        return RandomAgent(seed)
    if checkpoint is None:
        raise ValueError(f"--algo {algo} needs --checkpoint (produce one with `train`)")
    agent, trained_names = agent_from_checkpoint(checkpoint)
    if tuple(trained_names) != tuple(tasks):
        raise ValueError(
            f"checkpoint was trained on {list(trained_names)} but the benchmark "
            f"tasks are {list(tasks)}"
        )
    return LearnedAgent(agent, np.arange(len(tasks)))


def cmd_evaluate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    env_names = _benchmark_env_names(args)
    all_rows = []
    for seed in args.seeds:
        config = EnvConfig(reward_version=args.reward_version)
        built = make_benchmark(
            args.benchmark,
            vector_strategy=args.vector_strategy,
            seed=seed,
            env_names=env_names,
            config=config,
        )
        if isinstance(built, tuple):
            train_vec, test_vec = built
            train_vec.close()
            if args.algo in ALGORITHMS:
                test_vec.close()
                raise ValueError(
                    f"--algo {args.algo} has no adaptation hooks; meta benchmarks "
                    "accept scripted or random"
                )
            with test_vec:
                agent = _agent_for(args.algo, test_vec, seed, args.checkpoint)
                report = evaluate_metalearning(agent, test_vec)
        else:
            with built as vec:
                agent = _agent_for(args.algo, vec, seed, args.checkpoint)
                report = evaluate_multitask(agent, vec)
        rows = report.csv_rows(args.benchmark, args.reward_version, args.algo, seed)
        all_rows.extend(rows)
        (out_dir / f"report_seed{seed}.json").write_text(report.to_json())
        print(
            f"seed {seed}: mean success {report.mean_success_rate:.3f} "
            f"over {len(report.success_rate_per_task)} task(s)"
        )
    write_csv(out_dir / "results.csv", all_rows)
    return EXIT_OK


def cmd_train(args) -> int:
    if args.algo not in ALGORITHMS:
        raise ValueError(
            f"train supports {ALGORITHMS}; evaluate scripted/random directly"
        )
    out_dir = Path(args.out)
    env_names = _benchmark_env_names(args)
    for seed in args.seeds:
        config = EnvConfig(reward_version=args.reward_version)
        built = make_benchmark(
            args.benchmark,
            vector_strategy=args.vector_strategy,
            seed=seed,
            env_names=env_names,
            config=config,
        )
        if isinstance(built, tuple):
            for vec in built:
                vec.close()
            raise ValueError(
                "training runs on multi-task benchmarks; meta benchmarks are "
                "evaluation-only here"
            )
        task_set = built.task_set
        built.close()
        seed_dir = out_dir / f"seed{seed}"
        seed_dir.mkdir(parents=True, exist_ok=True)
        train_config = TrainConfig(
            algo=args.algo,
            total_steps=args.steps,
            warmup_steps=args.warmup,
            batch_size=args.batch_size,
            hidden=args.hidden,
            lr=args.lr,
            gamma=args.gamma,
            diag_every=args.diag_every,
            vector_strategy=args.vector_strategy,
            seed=seed,
        )
        result = train(
            task_set,
            config,
            train_config,
            diagnostics_path=seed_dir / "diagnostics.csv",
            checkpoint_path=seed_dir / "checkpoint.npz",
        )
        last = result.diagnostics[-1] if result.diagnostics else {}
        print(
            f"seed {seed}: {result.total_steps} steps, "
            f"final q_loss {last.get('q_loss', float('nan')):.4g}, "
            f"rolling success {last.get('success_rate', float('nan')):.3f}"
        )
    return EXIT_OK


def _measure_steps_per_sec(strategy: str, num_envs: int, steps: int, seed: int) -> float:
    fns = [
        (lambda i=i: ManipulationEnv("reach", EnvConfig(seed=seed + i)))
        for i in range(num_envs)
    ]
    rng = np.random.default_rng(seed)
    actions = rng.uniform(-1.0, 1.0, size=(steps, num_envs, 4))
    with make_vector_env(fns, strategy) as vec:
        vec.reset_all()
        start = time.perf_counter()
        for t in range(steps):
            vec.step_all(actions[t])
        elapsed = time.perf_counter() - start
    return num_envs * steps / elapsed


def cmd_bench(args) -> int:
    sync_rate = _measure_steps_per_sec("sync", args.num_envs, args.steps, args.seed)
    async_rate = _measure_steps_per_sec("async", args.num_envs, args.steps, args.seed)
    payload = json.dumps(
        {
            "num_envs": args.num_envs,
            "vector_steps": args.steps,
            "cpu_count": os.cpu_count(),
            "sync_steps_per_sec": sync_rate,
            "async_steps_per_sec": async_rate,
            "async_over_sync": async_rate / sync_rate,
        },
        indent=2,
    )
    _write_or_print(payload, args.out)
    return EXIT_OK


def _load_result_rows(path: Path):
    if path.is_dir():
        files = sorted(path.rglob("*.csv"))
        if not files:
            raise OSError(f"no CSV files under {path}")
    elif path.is_file():
        files = [path]
    else:
        raise OSError(f"no such file or directory: {path}")
    rows = []
    for file in files:
        for row in read_csv(file):
            missing = set(CSV_COLUMNS) - set(row)
            if missing:
                raise OSError(f"{file}: missing columns {sorted(missing)}")
            rows.append(row)
    if not rows:
        raise OSError(f"{path}: no result rows found")
    return rows


def cmd_aggregate(args) -> int:
    rows = _load_result_rows(Path(args.results))
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (row["benchmark"], row["reward_version"], row["algorithm"])
        groups.setdefault(key, []).append(row)

    out_rows = []
    for key in sorted(groups):
        benchmark, reward_version, algorithm = key
        group = groups[key]
        seeds = sorted({int(r["seed"]) for r in group})
        tasks = sorted({r["task"] for r in group})
        matrix = np.full((len(seeds), len(tasks)), np.nan)
        for r in group:
            matrix[seeds.index(int(r["seed"])), tasks.index(r["task"])] = float(
                r["success_rate"]
            )
        if np.any(np.isnan(matrix)):
            raise OSError(
                f"{args.results}: group {key} is missing seed/task combinations"
            )
        low, high = stratified_bootstrap_ci(matrix, seed=args.seed)
        out_rows.append(
            {
                "benchmark": benchmark,
                "reward_version": reward_version,
                "algorithm": algorithm,
                "seeds": len(seeds),
                "iqm_success": iqm(matrix.ravel()),
                "ci_low": low,
                "ci_high": high,
            }
        )

    lines = [",".join(AGGREGATE_COLUMNS)]
    for row in out_rows:
        lines.append(
            ",".join(
                [
                    row["benchmark"],
                    row["reward_version"],
                    row["algorithm"],
                    str(row["seeds"]),
                    f"{row['iqm_success']!r}",
                    f"{row['ci_low']!r}",
                    f"{row['ci_high']!r}",
                ]
            )
        )
    _write_or_print("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# ----------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deskworld",
        description="Desk-scale manipulation benchmark: tasks, rewards, "
        "evaluation, and smoke training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_list = sub.add_parser("list", help="dump the task catalog and benchmark IDs")
    p_list.add_argument("--out", default=None)
    p_list.set_defaults(func=cmd_list)

    p_trace = sub.add_parser(
        "reward-trace", help="scripted-expert per-step reward CSV for one episode"
    )
    p_trace.add_argument("--task", required=True)
    p_trace.add_argument("--variation", type=int, default=0)
    p_trace.add_argument("--reward-version", choices=("v1", "v2"), default="v2")
    p_trace.add_argument("--seed", type=int, default=0)
    p_trace.add_argument("--out", default=None)
    p_trace.set_defaults(func=cmd_reward_trace)

    p_eval = sub.add_parser("evaluate", help="run the evaluation protocol")
    p_eval.add_argument("--benchmark", required=True)
    p_eval.add_argument("--env", default=None, help="comma-separated task names for MT1/ML1/custom IDs")
    p_eval.add_argument("--reward-version", choices=("v1", "v2"), default="v2")
    p_eval.add_argument(
        "--algo", choices=(*ALGORITHMS, "scripted", "random"), default="scripted"
    )
    p_eval.add_argument("--seeds", type=_parse_seeds, default=[0])
    p_eval.add_argument("--vector-strategy", choices=("sync", "async"), default="sync")
    p_eval.add_argument("--checkpoint", default=None)
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(func=cmd_evaluate)

    p_train = sub.add_parser("train", help="smoke-scale training runs")
    p_train.add_argument("--benchmark", required=True)
    p_train.add_argument("--env", default=None)
    p_train.add_argument("--reward-version", choices=("v1", "v2"), default="v2")
    p_train.add_argument("--algo", choices=ALGORITHMS, default="mtmhsac")
    p_train.add_argument("--seeds", type=_parse_seeds, default=[0])
    p_train.add_argument("--steps", type=int, default=100_000)
    p_train.add_argument("--warmup", type=int, default=2_000)
    p_train.add_argument("--batch-size", type=int, default=128)
    p_train.add_argument("--hidden", type=_parse_hidden, default=(64, 64))
    p_train.add_argument("--lr", type=float, default=3e-4)
    p_train.add_argument("--gamma", type=float, default=0.9)
    p_train.add_argument("--diag-every", type=int, default=2_000)
    p_train.add_argument("--vector-strategy", choices=("sync", "async"), default="sync")
    p_train.add_argument("--out", required=True)
    p_train.set_defaults(func=cmd_train)

    p_bench = sub.add_parser("bench", help="vector-env throughput comparison")
    p_bench.add_argument("--num-envs", type=int, default=8)
    p_bench.add_argument("--steps", type=int, default=500)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", default=None)
    p_bench.set_defaults(func=cmd_bench)

    p_agg = sub.add_parser(
        "aggregate", help="IQM + bootstrap CI table from evaluation results"
    )
    p_agg.add_argument("--results", required=True, help="results.csv file or directory")
    p_agg.add_argument("--seed", type=int, default=0)
    p_agg.add_argument("--out", default=None)
    p_agg.set_defaults(func=cmd_aggregate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, TrainingError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
