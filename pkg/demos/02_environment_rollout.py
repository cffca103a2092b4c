"""Drive the decision-epoch environment and inspect what one epoch records.

A scripted policy spends one unit on the server branch whenever both queues
allow, which exercises arrivals, handover, payment, and queue updates.
"""

from mecoffload import JointAction, MecEnv, default_config

cfg = default_config(task_prob=0.6, energy_rate=1.0)
env = MecEnv(cfg, seed=7)

print(f"initial state: {env.state}")
print(f"{'epoch':>5} {'action':>8} {'q_t':>3} {'q_e':>3} {'bs':>2} "
      f"{'delay(ms)':>9} {'utility':>8}  notes")

for epoch in range(1, 26):
    s = env.state
    if s.task_queue > 0 and s.energy_queue > 0:
        # pick the BS with the best current gain
        best = max(range(cfg.num_bs),
                   key=lambda b: cfg.gain_levels_db[b][s.gain_idx[b]])
        action = JointAction(best + 1, 1)
    else:
        action = JointAction(0, 0)
    out = env.step(action)
    d = out.diagnostics
    notes = []
    if d.handover_s > 0:
        notes.append("handover")
    if d.forced_noop:
        notes.append("forced no-op")
    if d.drops:
        notes.append(f"dropped {d.drops}")
    if d.task_arrival:
        notes.append("task arrived")
    n = out.next_state
    print(f"{epoch:>5} {str(tuple(action)):>8} {n.task_queue:>3} "
          f"{n.energy_queue:>3} {n.assoc:>2} {d.d_s * 1e3:>9.3f} "
          f"{out.utility.total:>8.4f}  {', '.join(notes)}")

print("\nsame seed, same trajectory:")
env_a, env_b = MecEnv(cfg, seed=123), MecEnv(cfg, seed=123)
for _ in range(500):
    assert env_a.step(JointAction(1, 1)) == env_b.step(JointAction(1, 1))
print("  500 epochs bit-identical")
