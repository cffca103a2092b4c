"""Short training runs of both deep learners on the full-size system.

A few thousand epochs are enough to watch the loss climb out of the
initial transient and the online utility approach the baselines; the
validation suite runs the full-length versions.
"""

from mecoffload import default_config
from mecoffload.harness import ExperimentSpec, run_experiment

cfg = default_config(task_prob=0.5, energy_rate=0.8)
epochs = 4000

for algorithm in ("darling", "deep-sarl"):
    spec = ExperimentSpec(cfg=cfg, algorithm=algorithm, epochs=epochs)
    series = run_experiment(spec, seed=1)
    loss_ma = series.moving_average(series.loss, 500)
    util_ma = series.moving_average(series.utility, 500)
    print(f"=== {algorithm} ({epochs} epochs) ===")
    for epoch in (500, 1000, 2000, 3000, 4000):
        print(f"  epoch {epoch:>5}: loss MA {loss_ma[epoch - 1]:>8.4f}   "
              f"utility MA {util_ma[epoch - 1]:>8.4f}")
    summary = series.summary(tail_window=1000)
    print(f"  final 1000 epochs: utility {summary['tail_utility']:.4f}, "
          f"delay {summary['tail_delay'] * 1e3:.3f} ms, "
          f"payment {summary['tail_payment']:.5f}\n")

print("both learners train one minibatch per epoch once the replay memory")
print("holds a full batch, and resync their target networks every "
      f"{ExperimentSpec(cfg=cfg, algorithm='darling', epochs=1).sync_every} epochs.")
