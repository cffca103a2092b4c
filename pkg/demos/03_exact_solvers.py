"""Exact planning on the small instance, and the additive-decomposition fact.

Builds the analytic kernel, solves it by value iteration, evaluates random
policies agent-by-agent, and shows that the per-agent value tables sum to
the monolithic one to solver precision.
"""

import numpy as np

from mecoffload import K4_PATTERN, K5_PATTERN, tiny_config
from mecoffload.oracle import (build_kernel, policy_evaluation_decomposed,
                               value_iteration)

cfg = tiny_config()
kernel = build_kernel(cfg)
x_n, y_n = kernel.utility.shape
print(f"instance: {x_n} states x {y_n} actions, discount {cfg.discount}")
print(f"kernel row sums off by at most "
      f"{abs(kernel.transitions.sum(axis=2) - 1).max():.2e}")

tables = value_iteration(kernel, cfg.discount, tol=1e-12)
print(f"\nvalue iteration: {tables.iterations} sweeps, "
      f"residual {tables.residual:.2e}")
print(f"V ranges over [{tables.values.min():.4f}, {tables.values.max():.4f}]")
print("greedy actions used:", sorted(set(tables.policy.tolist())))

print("\nper-agent evaluation of 5 random policies:")
rng = np.random.default_rng(0)
for pattern, name in ((K5_PATTERN, "five groups"), (K4_PATTERN, "four groups")):
    worst = 0.0
    for _ in range(5):
        policy = rng.integers(y_n, size=x_n)
        q_k, q = policy_evaluation_decomposed(kernel, policy, pattern,
                                              cfg.discount)
        worst = max(worst, np.abs(q_k.sum(axis=0) - q).max())
    print(f"  {name}: max |sum of per-agent Q - monolithic Q| = {worst:.2e}")

print("\nthe additive utility makes the per-agent fixed points sum exactly")
print("to the joint one, whatever the grouping.")
