"""Command-line entry point.

Subcommands: `run` (one experiment), `sweep` (grid over an arrival
parameter), `oracle` (tabular cross-checks on the small instance), and
`gradcheck` (finite-difference audit of the network gradients). Exits
nonzero whenever a checked invariant fails.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import nn
from .config import default_config, load_config, tiny_config, with_params
from .harness import (ALGORITHMS, ExperimentSpec, emit_metrics,
                      run_experiment, sweep, write_summary)
from .oracle import (build_kernel, hybrid_alpha,
                     policy_evaluation_decomposed, tabular_q_learning,
                     value_iteration, export_tables)
from .config import K4_PATTERN, K5_PATTERN
from .env import MecEnv
from .harness import substream


def _parse_seeds(text: str) -> tuple[int, ...]:
    return tuple(int(s) for s in text.split(",") if s)


def _load_cfg(args):
    cfg = load_config(args.config) if args.config else default_config()
    overrides = {}
    if getattr(args, "task_prob", None) is not None:
        overrides["task_prob"] = args.task_prob
    if getattr(args, "energy_rate", None) is not None:
        overrides["energy_rate"] = args.energy_rate
    return with_params(cfg, **overrides) if overrides else cfg


def _cmd_run(args) -> int:
    cfg = _load_cfg(args)
    spec = ExperimentSpec(cfg=cfg, algorithm=args.algorithm,
                          epochs=args.epochs, seeds=_parse_seeds(args.seeds),
                          output_format=args.format)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for seed in spec.seeds:
        series = run_experiment(spec, seed)
        path = out_dir / f"{args.algorithm}_seed{seed}.{args.format}"
        emit_metrics(series, path, args.format)
        s = series.summary(args.tail_window)
        print(f"{args.algorithm} seed={seed}: tail utility "
              f"{s['tail_utility']:.4f}, mean utility {s['mean_utility']:.4f} "
              f"-> {path}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    values = tuple(float(v) for v in args.values.split(","))
    rows = []
    for algorithm in args.algorithms.split(","):
        spec = ExperimentSpec(cfg=cfg, algorithm=algorithm.strip(),
                              epochs=args.epochs,
                              seeds=_parse_seeds(args.seeds),
                              sweep_param=args.param.replace("-", "_"),
                              sweep_values=values,
                              tail_window=args.tail_window)
        rows.extend(sweep(spec))
    write_summary(rows, args.out)
    print(f"{len(rows)} summary rows -> {args.out}")
    return 0


def _cmd_oracle(args) -> int:
    cfg = tiny_config()
    kernel = build_kernel(cfg)
    failures = []

    row_err = np.abs(kernel.transitions.sum(axis=2) - 1.0).max()
    print(f"kernel rows sum to 1 within {row_err:.2e}")
    if row_err > 1e-12:
        failures.append("kernel normalization")

    tables = value_iteration(kernel, cfg.discount, tol=1e-12)
    print(f"value iteration: {tables.iterations} sweeps, "
          f"residual {tables.residual:.2e}, "
          f"V range [{tables.values.min():.4f}, {tables.values.max():.4f}]")

    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.policies):
        policy = rng.integers(kernel.num_actions, size=kernel.num_states)
        for pattern in (K5_PATTERN, K4_PATTERN):
            q_k, q = policy_evaluation_decomposed(kernel, policy, pattern,
                                                  cfg.discount)
            worst = max(worst, float(np.abs(q_k.sum(axis=0) - q).max()))
    print(f"decomposed policy evaluation: max |sum Q_k - Q| = {worst:.2e} "
          f"over {args.policies} random policies")
    if worst > 1e-10:
        failures.append("additive decomposition")

    if args.epochs > 0:
        env = MecEnv(cfg, channel_rng=substream(args.seed, "env-channel"),
                     arrival_rng=substream(args.seed, "env-arrivals"))
        q = tabular_q_learning(env, args.epochs,
                               substream(args.seed, "agent-explore"),
                               eps=lambda j: 1.0, alpha=hybrid_alpha(),
                               restart_every=4)
        gap = float(np.abs(q - tables.q_values).max())
        print(f"tabular q-learning after {args.epochs} epochs: "
              f"sup gap to value iteration {gap:.4f}")

    if args.out:
        export_tables(args.out, values=tables.values, q_values=tables.q_values,
                      policy=tables.policy)
        print(f"tables -> {args.out}")

    if failures:
        print("FAILED: " + ", ".join(failures))
        return 1
    return 0


def _cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for hidden in (40, 200):
        for _ in range(args.nets):
            params = nn.init_mlp(14, hidden, 35, rng)
            x = rng.normal(size=14)
            err = rng.normal(size=35)
            rel = nn.finite_difference_check(params, x, err)
            worst = max(worst, rel)
            print(f"14-{hidden}-35: max relative gradient error {rel:.3e}")
    if worst >= args.tol:
        print(f"FAILED: worst error {worst:.3e} >= {args.tol:g}")
        return 1
    print(f"all gradients within {args.tol:g} of central differences")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mecoffload",
        description="Stochastic computation offloading: simulation, "
                    "learning, and validation runs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one algorithm and emit metrics")
    p_run.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    p_run.add_argument("--config", help="config file (default: reference setup)")
    p_run.add_argument("--epochs", type=int, default=50_000)
    p_run.add_argument("--seeds", default="1")
    p_run.add_argument("--task-prob", type=float, dest="task_prob")
    p_run.add_argument("--energy-rate", type=float, dest="energy_rate")
    p_run.add_argument("--tail-window", type=int, default=5000)
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")
    p_run.add_argument("--out", default="runs")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="grid over an arrival parameter")
    p_sweep.add_argument("--param", required=True,
                         choices=("task-prob", "energy-rate"))
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated grid values")
    p_sweep.add_argument("--algorithms", default="darling,deep-sarl,mobile,server,greedy")
    p_sweep.add_argument("--config")
    p_sweep.add_argument("--epochs", type=int, default=50_000)
    p_sweep.add_argument("--seeds", default="1")
    p_sweep.add_argument("--task-prob", type=float, dest="task_prob")
    p_sweep.add_argument("--energy-rate", type=float, dest="energy_rate")
    p_sweep.add_argument("--tail-window", type=int, default=5000)
    p_sweep.add_argument("--out", default="sweep_summary.csv")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_oracle = sub.add_parser("oracle",
                              help="exact-solver cross-checks on the small instance")
    p_oracle.add_argument("--policies", type=int, default=20)
    p_oracle.add_argument("--epochs", type=int, default=0,
                          help="optional tabular-learning epochs to compare")
    p_oracle.add_argument("--seed", type=int, default=7)
    p_oracle.add_argument("--out", help="write solved tables as JSON")
    p_oracle.set_defaults(func=_cmd_oracle)

    p_grad = sub.add_parser("gradcheck",
                            help="finite-difference audit of network gradients")
    p_grad.add_argument("--nets", type=int, default=10)
    p_grad.add_argument("--tol", type=float, default=1e-4)
    p_grad.add_argument("--seed", type=int, default=5)
    p_grad.set_defaults(func=_cmd_gradcheck)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
