"""Experiment driver.

Runs one policy (learned, tabular, exact, or fixed) against the environment
for a given number of epochs, recording per-epoch metrics. All randomness
derives from one master seed through fixed labeled substreams, so runs are
reproducible and different algorithms under the same seed face identical
arrival and channel realizations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from .agents import (DarlingAgent, DarlingExperience, DeepSarlAgent,
                     SarlExperience)
from .baselines import (greedy_execution_policy, mobile_execution_policy,
                        server_execution_policy)
from .config import K5_PATTERN, SystemConfig, with_params
from .env import MecEnv, encode_state, index_action, num_actions
from .oracle import (build_kernel, state_index, tabular_q_learning,
                     tabular_sarl, value_iteration)
from .utility import decompose

ALGORITHMS = ("darling", "deep-sarl", "mobile", "server", "greedy",
              "tabular-q", "tabular-sarl", "value-iteration")

# Fixed substream labels; adding new ones at the end keeps old runs stable.
_STREAMS = ("env-channel", "env-arrivals", "agent-init", "agent-explore",
            "replay-sampling")

CSV_COLUMNS = ("epoch", "utility", "u1", "u2", "u3", "u4", "u5", "delay",
               "drops", "queuing", "payment", "penalty", "loss")


def substream(master_seed: int, label: str) -> np.random.Generator:
    """Named child generator of a master seed."""
    idx = _STREAMS.index(label)
    return np.random.default_rng(np.random.SeedSequence(master_seed,
                                                        spawn_key=(idx,)))


@dataclass
class ExperimentSpec:
    cfg: SystemConfig
    algorithm: str
    epochs: int
    seeds: tuple[int, ...] = (1,)
    sweep_param: Optional[str] = None          # "task_prob" or "energy_rate"
    sweep_values: tuple[float, ...] = ()
    output_dir: Optional[str] = None
    output_format: str = "csv"
    tail_window: int = 5000
    # learner knobs (the reference setup's values)
    hidden: int = 200
    hidden_per_agent: int = 40
    lr: float = 1e-4
    memory: int = 5000
    batch_size: int = 200
    sync_every: int = 200
    pattern: tuple = K5_PATTERN

    def validate(self) -> None:
        self.cfg.validate()
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not self.seeds:
            raise ValueError("at least one seed required")
        if self.sweep_param is not None:
            if self.sweep_param not in ("task_prob", "energy_rate"):
                raise ValueError(f"cannot sweep over {self.sweep_param!r}")
            lo = 0.0
            hi = 1.0 if self.sweep_param == "task_prob" else float("inf")
            for v in self.sweep_values:
                if not lo <= v <= hi:
                    raise ValueError(f"sweep value {v} out of range")
        if self.output_format not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.output_format!r}")


class MetricsSeries:
    """Per-epoch records of one run plus summary helpers."""

    def __init__(self, epochs: int, algorithm: str, seed: int):
        self.algorithm = algorithm
        self.seed = seed
        self.epochs = epochs
        self.utility = np.zeros(epochs)
        self.parts = np.zeros((5, epochs))      # u1..u5
        self.delay = np.zeros(epochs)           # scored (epoch-clipped) delay
        self.drops = np.zeros(epochs)
        self.queuing = np.zeros(epochs)
        self.payment = np.zeros(epochs)
        self.penalty = np.zeros(epochs)
        self.loss = np.full(epochs, np.nan)
        self.task_arrivals = np.zeros(epochs, dtype=np.int64)
        self.energy_arrivals = np.zeros(epochs, dtype=np.int64)

    def record(self, j: int, outcome, loss: Optional[float]) -> None:
        u = outcome.utility
        self.utility[j] = u.total
        self.parts[:, j] = u.components()
        self.delay[j] = u.delay_s
        self.drops[j] = u.drops
        self.queuing[j] = u.queuing
        self.payment[j] = u.payment
        self.penalty[j] = u.penalty
        if loss is not None:
            self.loss[j] = loss
        d = outcome.diagnostics
        self.task_arrivals[j] = d.task_arrival
        self.energy_arrivals[j] = d.energy_arrival

    def moving_average(self, values: np.ndarray, window: int) -> np.ndarray:
        """Trailing mean over the last `window` records (shorter at the
        start); NaNs are ignored."""
        if window < 1 or window > self.epochs:
            raise ValueError("window must lie in [1, epochs]")
        vals = np.nan_to_num(values, nan=0.0)
        good = (~np.isnan(values)).astype(float)
        csum = np.concatenate([[0.0], np.cumsum(vals)])
        cnt = np.concatenate([[0.0], np.cumsum(good)])
        starts = np.maximum(np.arange(self.epochs) + 1 - window, 0)
        ends = np.arange(self.epochs) + 1
        n = cnt[ends] - cnt[starts]
        with np.errstate(invalid="ignore"):
            return np.where(n > 0, (csum[ends] - csum[starts]) / n, np.nan)

    def summary(self, tail_window: int) -> dict:
        tail = slice(max(self.epochs - tail_window, 0), self.epochs)
        out = {"algorithm": self.algorithm, "seed": self.seed,
               "epochs": self.epochs}
        for name, arr in (("utility", self.utility), ("delay", self.delay),
                          ("drops", self.drops), ("queuing", self.queuing),
                          ("payment", self.payment), ("penalty", self.penalty)):
            out[f"mean_{name}"] = float(arr.mean())
            out[f"tail_{name}"] = float(arr[tail].mean())
        return out


def _fmt(x: float) -> str:
    return "%.17g" % x


def emit_metrics(series: MetricsSeries, path, fmt: str = "csv") -> None:
    """Write the per-epoch records; floats carry 17 significant digits."""
    columns = {
        "utility": series.utility,
        "u1": series.parts[0], "u2": series.parts[1], "u3": series.parts[2],
        "u4": series.parts[3], "u5": series.parts[4],
        "delay": series.delay, "drops": series.drops,
        "queuing": series.queuing, "payment": series.payment,
        "penalty": series.penalty, "loss": series.loss,
    }
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for j in range(series.epochs):
            row = [str(j + 1)]
            row += [_fmt(columns[name][j]) for name in CSV_COLUMNS[1:]]
            lines.append(",".join(row))
        text = "\n".join(lines) + "\n"
        with open(path, "w") as fh:
            fh.write(text)
    elif fmt == "json":
        payload = {"epoch": list(range(1, series.epochs + 1))}
        payload.update({k: v.tolist() for k, v in columns.items()})
        with open(path, "w") as fh:
            json.dump(payload, fh)
    else:
        raise ValueError(f"unknown output format {fmt!r}")


def _make_env(spec: ExperimentSpec, seed: int) -> MecEnv:
    return MecEnv(spec.cfg,
                  channel_rng=substream(seed, "env-channel"),
                  arrival_rng=substream(seed, "env-arrivals"))


def _single_threaded_blas():
    # multi-threaded BLAS loses on this workload's small matrices
    return threadpool_limits(limits=1, user_api="blas")


def _run_fixed_policy(spec, seed, policy) -> MetricsSeries:
    env = _make_env(spec, seed)
    series = MetricsSeries(spec.epochs, spec.algorithm, seed)
    for j in range(spec.epochs):
        outcome = env.step(policy(env.state, spec.cfg))
        series.record(j, outcome, None)
    return series


def _run_darling(spec, seed) -> MetricsSeries:
    cfg = spec.cfg
    env = _make_env(spec, seed)
    agent = DarlingAgent(
        input_dim=2 + 2 * cfg.num_bs, n_actions=num_actions(cfg),
        discount=cfg.discount, explore_eps=cfg.explore_eps,
        init_rng=substream(seed, "agent-init"),
        explore_rng=substream(seed, "agent-explore"),
        sample_rng=substream(seed, "replay-sampling"),
        hidden=spec.hidden, lr=spec.lr, memory=spec.memory,
        batch_size=spec.batch_size, sync_every=spec.sync_every)
    series = MetricsSeries(spec.epochs, spec.algorithm, seed)
    state = env.state
    vec = encode_state(state, cfg)
    with _single_threaded_blas():
        for j in range(1, spec.epochs + 1):
            action_idx = agent.act(vec)
            outcome = env.step(index_action(action_idx, cfg))
            next_vec = encode_state(outcome.next_state, cfg)
            agent.remember(DarlingExperience(
                state=state, state_vec=vec, action=action_idx,
                utility=outcome.utility.total,
                next_state=outcome.next_state, next_state_vec=next_vec))
            loss = agent.train_step()
            agent.maybe_sync(j)
            series.record(j - 1, outcome, loss)
            state, vec = outcome.next_state, next_vec
    return series


def _run_deep_sarl(spec, seed) -> MetricsSeries:
    cfg = spec.cfg
    env = _make_env(spec, seed)
    agent = DeepSarlAgent(
        input_dim=2 + 2 * cfg.num_bs, n_actions=num_actions(cfg),
        discount=cfg.discount, explore_eps=cfg.explore_eps,
        init_rng=substream(seed, "agent-init"),
        explore_rng=substream(seed, "agent-explore"),
        sample_rng=substream(seed, "replay-sampling"),
        pattern=spec.pattern, hidden_per_agent=spec.hidden_per_agent,
        lr=spec.lr, memory=spec.memory, batch_size=spec.batch_size,
        sync_every=spec.sync_every)
    series = MetricsSeries(spec.epochs, spec.algorithm, seed)
    state = env.state
    vec = encode_state(state, cfg)
    with _single_threaded_blas():
        action_idx = agent.act(vec)
        for j in range(1, spec.epochs + 1):
            outcome = env.step(index_action(action_idx, cfg))
            next_vec = encode_state(outcome.next_state, cfg)
            next_action = agent.act(next_vec)        # chosen before training
            agent.remember(SarlExperience(
                state=state, state_vec=vec, action=action_idx,
                agent_utilities=decompose(outcome.utility, spec.pattern),
                next_state=outcome.next_state, next_state_vec=next_vec,
                next_action=next_action))
            loss = agent.train_step()
            agent.maybe_sync(j)
            series.record(j - 1, outcome, loss)
            state, vec, action_idx = outcome.next_state, next_vec, next_action
    return series


def _replay_policy_run(spec, seed, policy_table) -> MetricsSeries:
    """Roll a fixed tabular policy (state-index -> action-index) forward."""
    cfg = spec.cfg
    env = _make_env(spec, seed)
    series = MetricsSeries(spec.epochs, spec.algorithm, seed)
    for j in range(spec.epochs):
        action = index_action(int(policy_table[state_index(env.state, cfg)]), cfg)
        series.record(j, env.step(action), None)
    return series


def _run_tabular(spec, seed) -> MetricsSeries:
    """Online tabular learning, metrics recorded along the learning run."""
    env = _make_env(spec, seed)
    rng = substream(seed, "agent-explore")
    series = MetricsSeries(spec.epochs, spec.algorithm, seed)
    on_step = lambda j, outcome: series.record(j - 1, outcome, None)
    if spec.algorithm == "tabular-q":
        tabular_q_learning(env, spec.epochs, rng, on_step=on_step)
    else:
        tabular_sarl(env, spec.epochs, rng, pattern=spec.pattern,
                     on_step=on_step)
    return series


def _run_value_iteration(spec, seed) -> MetricsSeries:
    tables = value_iteration(build_kernel(spec.cfg), spec.cfg.discount)
    return _replay_policy_run(spec, seed, tables.policy)


def run_experiment(spec: ExperimentSpec, seed: Optional[int] = None):
    """Run one algorithm; returns a MetricsSeries per seed (or a single
    series when `seed` is given)."""
    spec.validate()
    if seed is None:
        return [run_experiment(spec, s) for s in spec.seeds]
    if spec.algorithm == "darling":
        return _run_darling(spec, seed)
    if spec.algorithm == "deep-sarl":
        return _run_deep_sarl(spec, seed)
    if spec.algorithm in ("tabular-q", "tabular-sarl"):
        return _run_tabular(spec, seed)
    if spec.algorithm == "value-iteration":
        return _run_value_iteration(spec, seed)
    policy = {"mobile": mobile_execution_policy,
              "server": server_execution_policy,
              "greedy": greedy_execution_policy}[spec.algorithm]
    return _run_fixed_policy(spec, seed, policy)


def sweep(spec: ExperimentSpec):
    """Grid run over the spec's sweep axis; one summary row per
    (grid value, seed)."""
    spec.validate()
    if spec.sweep_param is None:
        raise ValueError("spec has no sweep axis")
    rows = []
    for value in spec.sweep_values:
        cfg = with_params(spec.cfg, **{spec.sweep_param: value})
        sub = ExperimentSpec(**{**spec.__dict__, "cfg": cfg,
                                "sweep_param": None, "sweep_values": ()})
        for s in spec.seeds:
            series = run_experiment(sub, s)
            row = {"param": spec.sweep_param, "value": value}
            row.update(series.summary(spec.tail_window))
            rows.append(row)
    return rows


def write_summary(rows, path) -> None:
    """Summary rows as CSV with stable column order."""
    if not rows:
        with open(path, "w") as fh:
            fh.write("")
        return
    cols = list(rows[0].keys())
    lines = [",".join(cols)]
    for row in rows:
        cells = []
        for c in cols:
            v = row[c]
            cells.append(_fmt(v) if isinstance(v, float) else str(v))
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
