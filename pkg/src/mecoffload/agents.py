"""Replay-memory deep learners.

DarlingAgent trains one network with double-estimator max targets (action
picked by the online net, valued by the delayed target net). DeepSarlAgent
keeps one smaller network per utility group and trains each on-policy
against the action actually taken next; behavior always maximizes the sum
of the per-agent outputs.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np

from .config import K5_PATTERN
from .nn import (MlpParams, adam_step, init_adam, init_mlp, mlp_forward,
                 mlp_forward_hidden, mlp_gradient)
from .utility import validate_pattern


class DarlingExperience(NamedTuple):
    state: object               # raw NetworkState
    state_vec: np.ndarray
    action: int
    utility: float
    next_state: object
    next_state_vec: np.ndarray


class SarlExperience(NamedTuple):
    state: object
    state_vec: np.ndarray
    action: int
    agent_utilities: tuple[float, ...]
    next_state: object
    next_state_vec: np.ndarray
    next_action: int


class ReplayMemory:
    """Bounded ring buffer; eviction is strictly oldest-first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.count = 0                  # total insertions ever
        self._buf: list = []

    def __len__(self) -> int:
        return len(self._buf)

    def push(self, experience) -> None:
        if len(self._buf) < self.capacity:
            self._buf.append(experience)
        else:
            self._buf[self.count % self.capacity] = experience
        self.count += 1

    def ready(self, batch_size: int) -> bool:
        return len(self._buf) >= batch_size

    def sample(self, batch_size: int, rng) -> list:
        """Uniform mini-batch without replacement; None while undersized."""
        if not self.ready(batch_size):
            return None
        idx = rng.choice(len(self._buf), size=batch_size, replace=False)
        return [self._buf[i] for i in idx]


def select_action(q_values, eps: float, rng) -> int:
    """Epsilon-greedy over a vector of action values; greedy ties go to the
    lowest index."""
    q_values = np.asarray(q_values)
    if q_values.size == 0:
        raise ValueError("empty action-value vector")
    if rng.random() < eps:
        return int(rng.integers(q_values.size))
    return int(np.argmax(q_values))


def darling_target(exp: DarlingExperience, online: MlpParams,
                   target: MlpParams, discount: float) -> float:
    """Double-estimator target: (1-g) u + g * target-net value of the action
    the online net prefers at the next state."""
    a_star = int(np.argmax(mlp_forward(online, exp.next_state_vec)))
    bootstrap = mlp_forward(target, exp.next_state_vec)[a_star]
    return (1.0 - discount) * exp.utility + discount * float(bootstrap)


def sarl_targets(exp: SarlExperience, targets: list[MlpParams],
                 discount: float) -> tuple[float, ...]:
    """Per-agent on-policy targets: bootstrap at the stored next action."""
    return tuple(
        (1.0 - discount) * u_k
        + discount * float(mlp_forward(tp, exp.next_state_vec)[exp.next_action])
        for u_k, tp in zip(exp.agent_utilities, targets))


class DarlingAgent:
    # default step size 1e-4: large enough to track the value scale, small
    # enough that convergence spans the intended 1e4-epoch horizon
    def __init__(self, input_dim: int, n_actions: int, discount: float,
                 explore_eps: float, init_rng, explore_rng, sample_rng,
                 hidden: int = 200, lr: float = 1e-4, memory: int = 5000,
                 batch_size: int = 200, sync_every: int = 200):
        self.n_actions = n_actions
        self.discount = discount
        self.explore_eps = explore_eps
        self.batch_size = batch_size
        self.sync_every = sync_every
        self.params = init_mlp(input_dim, hidden, n_actions, init_rng)
        self.target = self.params.copy()
        self.adam = init_adam(self.params, lr=lr)
        self.memory = ReplayMemory(memory)
        self.explore_rng = explore_rng
        self.sample_rng = sample_rng

    def q_values(self, state_vec) -> np.ndarray:
        return mlp_forward(self.params, state_vec)

    def act(self, state_vec) -> int:
        return select_action(self.q_values(state_vec), self.explore_eps,
                             self.explore_rng)

    def remember(self, exp: DarlingExperience) -> None:
        self.memory.push(exp)

    def train_step(self) -> Optional[float]:
        """One mini-batch update; returns the mean squared target error or
        None while the memory is still filling."""
        batch = self.memory.sample(self.batch_size, self.sample_rng)
        if batch is None:
            return None
        n = len(batch)
        states = np.stack([b.state_vec for b in batch])
        nexts = np.stack([b.next_state_vec for b in batch])
        actions = np.fromiter((b.action for b in batch), dtype=int, count=n)
        utils = np.fromiter((b.utility for b in batch), dtype=float, count=n)

        a_star = mlp_forward(self.params, nexts).argmax(axis=1)
        bootstrap = mlp_forward(self.target, nexts)[np.arange(n), a_star]
        y = (1.0 - self.discount) * utils + self.discount * bootstrap

        q, hidden = mlp_forward_hidden(self.params, states)
        pred = q[np.arange(n), actions]
        loss = float(np.mean((y - pred) ** 2))

        err = np.zeros_like(q)
        err[np.arange(n), actions] = (pred - y) / n   # d(mean half-sq-error)/dq
        grads = mlp_gradient(self.params, states, err, hidden=hidden)
        self.params, self.adam = adam_step(self.params, self.adam, grads)
        return loss

    def sync_target(self) -> None:
        self.target = self.params.copy()

    def maybe_sync(self, epoch: int) -> None:
        if epoch % self.sync_every == 0:
            self.sync_target()

    def save(self, path) -> None:
        """Checkpoint online/target parameters and optimizer state."""
        np.savez(path, **_pack("online", self.params),
                 **_pack("target", self.target),
                 **_pack_adam("adam", self.adam))

    def load(self, path) -> None:
        with np.load(path) as data:
            self.params = _unpack("online", data)
            self.target = _unpack("target", data)
            self.adam = _unpack_adam("adam", data)


class DeepSarlAgent:
    def __init__(self, input_dim: int, n_actions: int, discount: float,
                 explore_eps: float, init_rng, explore_rng, sample_rng,
                 pattern=K5_PATTERN, hidden_per_agent: int = 40,
                 lr: float = 1e-4, memory: int = 5000, batch_size: int = 200,
                 sync_every: int = 200):
        validate_pattern(pattern)
        self.pattern = pattern
        self.n_agents = len(pattern)
        self.n_actions = n_actions
        self.discount = discount
        self.explore_eps = explore_eps
        self.batch_size = batch_size
        self.sync_every = sync_every
        self.params = [init_mlp(input_dim, hidden_per_agent, n_actions, init_rng)
                       for _ in range(self.n_agents)]
        self.targets = [p.copy() for p in self.params]
        self.adams = [init_adam(p, lr=lr) for p in self.params]
        self.memory = ReplayMemory(memory)
        self.explore_rng = explore_rng
        self.sample_rng = sample_rng

    def q_values(self, state_vec) -> np.ndarray:
        """Aggregated action values: the sum over agents."""
        total = mlp_forward(self.params[0], state_vec)
        for p in self.params[1:]:
            total = total + mlp_forward(p, state_vec)
        return total

    def act(self, state_vec) -> int:
        return select_action(self.q_values(state_vec), self.explore_eps,
                             self.explore_rng)

    def remember(self, exp: SarlExperience) -> None:
        self.memory.push(exp)

    def train_step(self) -> Optional[float]:
        """One mini-batch update of every agent; returns the accumulative
        loss (sum of per-agent mean squared errors) or None if not ready."""
        batch = self.memory.sample(self.batch_size, self.sample_rng)
        if batch is None:
            return None
        n = len(batch)
        states = np.stack([b.state_vec for b in batch])
        nexts = np.stack([b.next_state_vec for b in batch])
        actions = np.fromiter((b.action for b in batch), dtype=int, count=n)
        next_actions = np.fromiter((b.next_action for b in batch), dtype=int, count=n)
        agent_utils = np.array([b.agent_utilities for b in batch])   # (n, K)
        rows = np.arange(n)

        total = 0.0
        for k in range(self.n_agents):
            bootstrap = mlp_forward(self.targets[k], nexts)[rows, next_actions]
            y = (1.0 - self.discount) * agent_utils[:, k] + self.discount * bootstrap
            q, hidden = mlp_forward_hidden(self.params[k], states)
            pred = q[rows, actions]
            total += float(np.mean((y - pred) ** 2))
            err = np.zeros_like(q)
            err[rows, actions] = (pred - y) / n
            grads = mlp_gradient(self.params[k], states, err, hidden=hidden)
            self.params[k], self.adams[k] = adam_step(self.params[k],
                                                      self.adams[k], grads)
        return total

    def sync_target(self) -> None:
        self.targets = [p.copy() for p in self.params]

    def maybe_sync(self, epoch: int) -> None:
        if epoch % self.sync_every == 0:
            self.sync_target()

    def save(self, path) -> None:
        """Checkpoint each agent's online/target parameters and optimizer."""
        arrays = {}
        for k in range(self.n_agents):
            arrays.update(_pack(f"online{k}", self.params[k]))
            arrays.update(_pack(f"target{k}", self.targets[k]))
            arrays.update(_pack_adam(f"adam{k}", self.adams[k]))
        np.savez(path, **arrays)

    def load(self, path) -> None:
        with np.load(path) as data:
            self.params = [_unpack(f"online{k}", data)
                           for k in range(self.n_agents)]
            self.targets = [_unpack(f"target{k}", data)
                            for k in range(self.n_agents)]
            self.adams = [_unpack_adam(f"adam{k}", data)
                          for k in range(self.n_agents)]


_FIELDS = ("w1", "b1", "w2", "b2")


def _pack(prefix, params: MlpParams) -> dict:
    return {f"{prefix}_{f}": getattr(params, f) for f in _FIELDS}


def _unpack(prefix, data) -> MlpParams:
    return MlpParams(*(data[f"{prefix}_{f}"] for f in _FIELDS))


def _pack_adam(prefix, adam) -> dict:
    out = _pack(f"{prefix}_m", adam.m)
    out.update(_pack(f"{prefix}_v", adam.v))
    out[f"{prefix}_meta"] = np.array(
        [adam.step, adam.lr, adam.beta1, adam.beta2, adam.eps])
    return out


def _unpack_adam(prefix, data):
    from .nn import AdamState
    meta = data[f"{prefix}_meta"]
    return AdamState(m=_unpack(f"{prefix}_m", data),
                     v=_unpack(f"{prefix}_v", data),
                     step=int(meta[0]), lr=float(meta[1]),
                     beta1=float(meta[2]), beta2=float(meta[3]),
                     eps=float(meta[4]))
