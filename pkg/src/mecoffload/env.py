"""Decision-epoch environment.

State is (task queue, energy queue, BS association, per-BS channel gain
levels). Each epoch the device picks an offload target and an energy budget;
the epoch resolves deterministically given the realized arrivals and channel
moves, which `MecEnv` samples from its own generators. The deterministic
part lives in `transition` so the exact solvers can reuse it unchanged.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from typing import NamedTuple, Optional

import numpy as np

from . import link
from .utility import UtilityBreakdown, utility_components


class NetworkState(NamedTuple):
    task_queue: int
    energy_queue: int
    assoc: int                  # currently associated BS, 1-based
    gain_idx: tuple[int, ...]   # per-BS channel gain level index


class JointAction(NamedTuple):
    offload: int    # 0 = local CPU, b in 1..B = offload via BS b
    energy: int     # energy units committed this epoch


class StepDiagnostics(NamedTuple):
    d_s: float
    handover_s: float
    d_mobile_s: float           # nan unless a local run happened
    d_tr_s: float               # nan unless a transmission happened
    power_capped: bool
    forced_noop: bool           # energy was requested but nothing could run
    energy_spent: int           # units actually deducted from the battery
    drops: int
    queuing: int
    penalty: int
    payment: float
    task_arrival: int
    energy_arrival: int


class StepOutcome(NamedTuple):
    next_state: NetworkState
    utility: UtilityBreakdown
    diagnostics: StepDiagnostics


def sample_task_arrival(rng, prob: float) -> int:
    """Bernoulli task arrival indicator."""
    return 1 if rng.random() < prob else 0


def sample_energy_arrival(rng, rate: float) -> int:
    """Poisson count of harvested energy units (uncapped; the queue clips)."""
    return int(rng.poisson(rate))


def step_channel(gain_idx, matrices, rng) -> tuple[int, ...]:
    """Advance every BS's gain level one step along its Markov chain."""
    out = []
    for idx, mat in zip(gain_idx, matrices):
        row = np.cumsum(np.asarray(mat, dtype=float)[idx])
        if abs(row[-1] - 1.0) > 1e-12 or np.any(np.diff(row) < -1e-15):
            raise ValueError("channel matrix row is not a distribution")
        nxt = bisect_right(row.tolist(), rng.random())
        out.append(min(nxt, len(row) - 1))
    return tuple(out)


def update_association(assoc: int, c: int, executed: bool) -> int:
    """New association: the chosen BS if a task was actually offloaded
    through it this epoch, otherwise unchanged."""
    return c if (c >= 1 and executed) else assoc


def space_sizes(cfg) -> tuple[int, int]:
    """Cardinalities (X, Y) of the state and joint-action spaces."""
    x = (1 + cfg.task_cap) * (1 + cfg.energy_cap) * cfg.num_bs
    for levels in cfg.gain_levels_db:
        x *= len(levels)
    y = (1 + cfg.num_bs) * (1 + cfg.energy_cap)
    return x, y


def num_actions(cfg) -> int:
    return (1 + cfg.num_bs) * (1 + cfg.energy_cap)


def action_index(action, cfg) -> int:
    c, e = action
    return c * (1 + cfg.energy_cap) + e


def index_action(idx: int, cfg) -> JointAction:
    span = 1 + cfg.energy_cap
    return JointAction(idx // span, idx % span)


def encode_state(state: NetworkState, cfg) -> np.ndarray:
    """Fixed-length observation vector for the function approximators.

    Layout: [task fill, energy fill, one-hot association, per-BS gain scaled
    linearly to [-1, 1] over that BS's level range]; length 2 + 2B.
    """
    b = cfg.num_bs
    out = np.zeros(2 + 2 * b)
    out[0] = state.task_queue / cfg.task_cap
    out[1] = state.energy_queue / cfg.energy_cap
    out[1 + state.assoc] = 1.0
    for i in range(b):
        levels = cfg.gain_levels_db[i]
        lo, hi = min(levels), max(levels)
        g = levels[state.gain_idx[i]]
        out[2 + b + i] = 0.0 if hi == lo else 2.0 * (g - lo) / (hi - lo) - 1.0
    return out


def resolve_action(state: NetworkState, action, cfg):
    """Feasibility screen plus delay/energy bookkeeping for one epoch.

    Committing zero energy, more energy than the battery holds, or any
    energy with an empty task queue all collapse to a no-op that spends
    nothing. Returns (d, handover, units_spent, forced_noop, parts).
    """
    c, e = action
    executable = 0 < e <= state.energy_queue and state.task_queue > 0
    if not executable:
        return 0.0, 0.0, 0, e > 0, {"local": None, "transmit": None}
    d, parts = link.execution_delay(state, action, cfg)
    return d, parts["handover_s"], e, False, parts


def transition(state: NetworkState, action, a_t: int, a_e: int,
               next_gain: tuple[int, ...], cfg) -> StepOutcome:
    """One epoch with all randomness (arrivals, channel move) already drawn."""
    c, e = action
    d, h, spent, noop, parts = resolve_action(state, action, cfg)
    removed = 1 if 0.0 < d <= cfg.epoch_s else 0
    breakdown = utility_components(state, action, d, h, a_t, cfg)
    next_state = NetworkState(
        task_queue=min(state.task_queue - removed + a_t, cfg.task_cap),
        energy_queue=min(state.energy_queue - spent + a_e, cfg.energy_cap),
        assoc=update_association(state.assoc, c, spent > 0),
        gain_idx=next_gain)
    local, tr = parts["local"], parts["transmit"]
    diag = StepDiagnostics(
        d_s=d, handover_s=h,
        d_mobile_s=local.d_mobile_s if local else math.nan,
        d_tr_s=tr.d_tr_s if tr else math.nan,
        power_capped=bool(tr and tr.power_capped),
        forced_noop=noop, energy_spent=spent,
        drops=breakdown.drops, queuing=breakdown.queuing,
        penalty=breakdown.penalty, payment=breakdown.payment,
        task_arrival=a_t, energy_arrival=a_e)
    return StepOutcome(next_state, breakdown, diag)


class MecEnv:
    """Stateful simulator; owns one generator for arrivals and one for the
    channel chains so that policies with identical seeds face identical
    randomness regardless of what they do."""

    def __init__(self, cfg, channel_rng=None, arrival_rng=None, seed=None):
        cfg.validate()
        self.cfg = cfg
        if channel_rng is None or arrival_rng is None:
            ss = np.random.SeedSequence(seed)
            kids = ss.spawn(2)
            channel_rng = channel_rng or np.random.default_rng(kids[0])
            arrival_rng = arrival_rng or np.random.default_rng(kids[1])
        self.channel_rng = channel_rng
        self.arrival_rng = arrival_rng
        # Cumulative rows as plain lists: bisect on them beats numpy here.
        self._cum_rows = [
            [np.cumsum(np.asarray(m, dtype=float)[i]).tolist() for i in range(len(m))]
            for m in cfg.channel_matrices]
        self._num_levels = [len(lv) for lv in cfg.gain_levels_db]
        self.state: Optional[NetworkState] = None
        self.reset()

    def reset(self, state: Optional[NetworkState] = None) -> NetworkState:
        if state is None:
            gains = tuple(int(self.channel_rng.integers(n)) for n in self._num_levels)
            state = NetworkState(task_queue=0, energy_queue=0, assoc=1, gain_idx=gains)
        self._check_state(state)
        self.state = state
        return state

    def step(self, action) -> StepOutcome:
        c, e = action
        cfg = self.cfg
        if not (0 <= c <= cfg.num_bs and 0 <= e <= cfg.energy_cap):
            raise ValueError(f"action {action} outside the joint action space")
        a_t = sample_task_arrival(self.arrival_rng, cfg.task_prob)
        a_e = sample_energy_arrival(self.arrival_rng, cfg.energy_rate)
        gains = self.state.gain_idx
        rng = self.channel_rng
        next_gain = tuple(
            min(bisect_right(rows[g], rng.random()), len(rows[g]) - 1)
            for g, rows in zip(gains, self._cum_rows))
        outcome = transition(self.state, action, a_t, a_e, next_gain, cfg)
        self.state = outcome.next_state
        return outcome

    def encode(self, state: Optional[NetworkState] = None) -> np.ndarray:
        return encode_state(self.state if state is None else state, self.cfg)

    def _check_state(self, state: NetworkState) -> None:
        cfg = self.cfg
        ok = (0 <= state.task_queue <= cfg.task_cap
              and 0 <= state.energy_queue <= cfg.energy_cap
              and 1 <= state.assoc <= cfg.num_bs
              and len(state.gain_idx) == cfg.num_bs
              and all(0 <= g < n for g, n in zip(state.gain_idx, self._num_levels)))
        if not ok:
            raise ValueError(f"state {state} violates the state-space bounds")
