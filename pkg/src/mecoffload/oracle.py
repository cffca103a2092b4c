"""Exact solvers and tabular learners for enumerable instances.

Builds the analytic transition kernel and expected-utility tables of a small
configuration, solves them by value iteration or direct linear algebra, and
runs the tabular online learners (off-policy max-target updates and the
on-policy per-agent variant). These are the ground truth the environment
dynamics and the deep agents are validated against.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import poisson

from .config import K5_PATTERN
from .env import (NetworkState, index_action, resolve_action, space_sizes)
from .utility import decompose, task_drop, validate_pattern

MAX_ENUMERABLE_PAIRS = 1_000_000


class SpaceTooLargeError(RuntimeError):
    """Raised instead of trying to enumerate an intractable instance."""


# --- state/action enumeration ------------------------------------------------

def _gain_radix(cfg):
    return [len(levels) for levels in cfg.gain_levels_db]


def state_index(state: NetworkState, cfg) -> int:
    idx = state.task_queue
    idx = idx * (1 + cfg.energy_cap) + state.energy_queue
    idx = idx * cfg.num_bs + (state.assoc - 1)
    for g, n in zip(state.gain_idx, _gain_radix(cfg)):
        idx = idx * n + g
    return idx


def index_state(idx: int, cfg) -> NetworkState:
    radix = _gain_radix(cfg)
    gains = []
    for n in reversed(radix):
        idx, g = divmod(idx, n)
        gains.append(g)
    idx, s = divmod(idx, cfg.num_bs)
    q_t, q_e = divmod(idx, 1 + cfg.energy_cap)
    return NetworkState(task_queue=q_t, energy_queue=q_e, assoc=s + 1,
                        gain_idx=tuple(reversed(gains)))


def enumerate_states(cfg):
    x, _ = space_sizes(cfg)
    return [index_state(i, cfg) for i in range(x)]


# --- analytic kernel ----------------------------------------------------------

@dataclass
class Kernel:
    """Dense transition tensor P[x, y, x'] and expected per-component
    utilities (components indexed 0..4, summing to `utility`)."""
    cfg: object
    transitions: np.ndarray          # (X, Y, X)
    utility_components: np.ndarray   # (5, X, Y)
    utility: np.ndarray              # (X, Y)

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]

    def component_table(self, pattern) -> np.ndarray:
        """Expected per-agent utilities (K, X, Y) for a component grouping."""
        validate_pattern(pattern)
        return np.stack([
            np.add.reduce([self.utility_components[i - 1] for i in group])
            for group in pattern])


def _channel_joint(cfg) -> np.ndarray:
    """Joint gain-combination transition matrix: Kronecker product of the
    per-BS chains, BS 1 most significant (matches state_index ordering)."""
    joint = np.array([[1.0]])
    for mat in cfg.channel_matrices:
        joint = np.kron(joint, np.asarray(mat, dtype=float))
    return joint


def build_kernel(cfg) -> Kernel:
    """Exact one-epoch kernel: deterministic delay map composed with the
    Bernoulli task arrival, clipped-Poisson energy arrival, and the channel
    chains. Expected utility averages the drop component over the arrival."""
    x_n, y_n = space_sizes(cfg)
    if x_n * y_n > MAX_ENUMERABLE_PAIRS:
        raise SpaceTooLargeError(
            f"state-action space has {x_n * y_n} pairs "
            f"(limit {MAX_ENUMERABLE_PAIRS})")

    gain_block = math.prod(_gain_radix(cfg))
    joint = _channel_joint(cfg)

    # Clipped-Poisson rows: arrival_pm[k] for k < cap_room, tail mass at cap.
    pm = poisson.pmf(np.arange(cfg.energy_cap + 1), cfg.energy_rate)
    w1, w2, w3, w4, w5 = cfg.weights
    p_task = cfg.task_prob

    trans = np.zeros((x_n, y_n, x_n))
    ucomp = np.zeros((5, x_n, y_n))
    for xi in range(x_n):
        state = index_state(xi, cfg)
        g_row = joint[xi % gain_block]
        for yi in range(y_n):
            action = index_action(yi, cfg)
            d, h, spent, _, _ = resolve_action(state, action, cfg)
            removed = 1 if 0.0 < d <= cfg.epoch_s else 0
            assoc_next = (action.offload if spent > 0 and action.offload >= 1
                          else state.assoc)

            # Deterministic components; drops averaged over the task arrival.
            delay = min(d, cfg.epoch_s)
            queued = state.task_queue - (1 if d > 0.0 else 0)
            failed = 1 if d > cfg.epoch_s else 0
            paid = (cfg.mec_price * (delay - h)) if action.offload >= 1 else 0.0
            e_drop = sum(
                p * math.exp(-task_drop(state.task_queue, d, a_t, cfg))
                for a_t, p in ((0, 1.0 - p_task), (1, p_task)) if p > 0.0)
            ucomp[:, xi, yi] = (w1 * math.exp(-delay), w2 * e_drop,
                                w3 * math.exp(-queued), w4 * math.exp(-failed),
                                w5 * math.exp(-paid))

            # Task-queue branch probabilities by arrival indicator.
            for a_t, p_t in ((0, 1.0 - p_task), (1, p_task)):
                if p_t == 0.0:
                    continue
                q_t2 = min(state.task_queue - removed + a_t, cfg.task_cap)
                # Energy-queue distribution from the clipped Poisson arrival.
                base = state.energy_queue - spent
                room = cfg.energy_cap - base
                for a_e in range(room + 1):
                    p_e = pm[a_e] if a_e < room else 1.0 - pm[:room].sum()
                    if p_e <= 0.0:
                        continue
                    q_e2 = min(base + a_e, cfg.energy_cap)
                    head = ((q_t2 * (1 + cfg.energy_cap) + q_e2) * cfg.num_bs
                            + (assoc_next - 1)) * gain_block
                    trans[xi, yi, head:head + gain_block] += p_t * p_e * g_row

    return Kernel(cfg=cfg, transitions=trans, utility_components=ucomp,
                  utility=np.add.reduce(list(ucomp)))


# --- exact planning -----------------------------------------------------------

@dataclass
class ValueTables:
    values: np.ndarray       # (X,)
    q_values: np.ndarray     # (X, Y)
    policy: np.ndarray       # (X,) greedy action indices
    residual: float
    iterations: int


def value_iteration(kernel: Kernel, discount: float, tol: float = 1e-12,
                    max_iter: int = 200_000) -> ValueTables:
    """Fixed point of V = max_a [(1 - g) u + g P V].

    Immediate utility carries the (1 - discount) normalization, so constant
    utility u0 yields V = u0 identically.
    """
    p = kernel.transitions
    u = kernel.utility
    v = np.zeros(kernel.num_states)
    for it in range(1, max_iter + 1):
        q = (1.0 - discount) * u + discount * (p @ v)
        v_next = q.max(axis=1)
        resid = np.abs(v_next - v).max()
        v = v_next
        if resid < tol:
            return ValueTables(values=v, q_values=q, policy=q.argmax(axis=1),
                               residual=resid, iterations=it)
    raise RuntimeError(f"value iteration stalled at residual {resid:.3e} "
                       f"after {max_iter} sweeps")


def policy_evaluation_decomposed(kernel: Kernel, policy, pattern,
                                 discount: float):
    """Exact per-agent and monolithic Q tables of a deterministic policy.

    Solves the linear fixed points Q_k = (1 - g) u_k + g P_pi Q_k directly;
    by additivity the per-agent tables sum to the monolithic one.
    """
    policy = np.asarray(policy, dtype=int)
    x_n = kernel.num_states
    p = kernel.transitions
    p_pi = p[np.arange(x_n), policy]                  # (X, X)
    lhs = np.eye(x_n) - discount * p_pi

    def solve(u_table):
        u_pi = u_table[np.arange(x_n), policy]
        v = np.linalg.solve(lhs, (1.0 - discount) * u_pi)
        return (1.0 - discount) * u_table + discount * (p @ v)

    per_agent = kernel.component_table(pattern)
    q_k = np.stack([solve(per_agent[k]) for k in range(per_agent.shape[0])])
    q = solve(kernel.utility)
    return q_k, q


# --- tabular learners ---------------------------------------------------------

def default_alpha(visits: int) -> float:
    return (1.0 + visits) ** -0.85


def default_eps(epoch: int) -> float:
    return max(0.01, epoch ** -0.5)


def _eps_greedy(q_row, eps, rng, y_n):
    if rng.random() < eps:
        return int(rng.integers(y_n))
    return int(np.argmax(q_row))


def hybrid_alpha(cut: int = 1000):
    """Polynomial decay while a pair is young, sample-averaging afterwards.

    The polynomial phase burns off the zero-initialization transient; the
    1/n tail drives the per-pair noise (and with it the max-operator
    overestimation) to the statistical floor.
    """
    def alpha(visits: int) -> float:
        return (1.0 + visits) ** -0.85 if visits < cut else 1.0 / (1.0 + visits)
    return alpha


def tabular_q_learning(env, epochs: int, rng, alpha=default_alpha,
                       eps=default_eps, discount=None, on_step=None,
                       restart_every: Optional[int] = None) -> np.ndarray:
    """Online max-target updates against the live environment.

    Per-pair learning rates alpha(visits) and the exploration schedule
    eps(epoch) are injectable; the defaults satisfy the usual square-
    summability and persistent-exploration conditions. `restart_every`
    enables exploring starts: the environment is reset to a uniformly drawn
    state every so many epochs, evening out state coverage on small
    instances. `on_step(j, outcome)` is called after every epoch when given.
    """
    cfg = env.cfg
    x_n, y_n = space_sizes(cfg)
    if x_n * y_n > MAX_ENUMERABLE_PAIRS:
        raise SpaceTooLargeError(f"{x_n * y_n} Q entries will not converge tabularly")
    if discount is None:
        discount = cfg.discount
    q = np.zeros((x_n, y_n))
    visits = np.zeros((x_n, y_n), dtype=np.int64)
    xi = state_index(env.state, cfg)
    for j in range(1, epochs + 1):
        if restart_every and j % restart_every == 1:
            xi = int(rng.integers(x_n))
            env.reset(index_state(xi, cfg))
        yi = _eps_greedy(q[xi], eps(j), rng, y_n)
        outcome = env.step(index_action(yi, cfg))
        xn = state_index(outcome.next_state, cfg)
        a = alpha(visits[xi, yi])
        visits[xi, yi] += 1
        target = ((1.0 - discount) * outcome.utility.total
                  + discount * q[xn].max())
        q[xi, yi] += a * (target - q[xi, yi])
        if on_step is not None:
            on_step(j, outcome)
        xi = xn
    return q


def tabular_sarl(env, epochs: int, rng, pattern=K5_PATTERN,
                 alpha=default_alpha, eps=default_eps, discount=None,
                 on_step=None) -> np.ndarray:
    """On-policy per-agent updates sharing one behavior policy.

    Actions maximize the aggregated per-agent tables; every agent's update
    bootstraps from the action actually taken next, exploratory or not.
    Returns the (K, X, Y) stack of per-agent tables.
    """
    validate_pattern(pattern)
    cfg = env.cfg
    x_n, y_n = space_sizes(cfg)
    if x_n * y_n > MAX_ENUMERABLE_PAIRS:
        raise SpaceTooLargeError(f"{x_n * y_n} Q entries will not converge tabularly")
    if discount is None:
        discount = cfg.discount
    k_n = len(pattern)
    q = np.zeros((k_n, x_n, y_n))
    visits = np.zeros((x_n, y_n), dtype=np.int64)
    xi = state_index(env.state, cfg)
    yi = _eps_greedy(q[:, xi].sum(axis=0), eps(1), rng, y_n)
    for j in range(1, epochs + 1):
        outcome = env.step(index_action(yi, cfg))
        xn = state_index(outcome.next_state, cfg)
        yn = _eps_greedy(q[:, xn].sum(axis=0), eps(j + 1), rng, y_n)
        u_k = decompose(outcome.utility, pattern)
        a = alpha(visits[xi, yi])
        visits[xi, yi] += 1
        for k in range(k_n):
            target = (1.0 - discount) * u_k[k] + discount * q[k, xn, yn]
            q[k, xi, yi] += a * (target - q[k, xi, yi])
        if on_step is not None:
            on_step(j, outcome)
        xi, yi = xn, yn
    return q


def export_tables(path, **tables) -> None:
    """Dump named arrays as JSON lists for regression fixtures."""
    payload = {name: np.asarray(arr).tolist() for name, arr in tables.items()}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
