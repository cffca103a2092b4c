"""Per-epoch satisfaction model.

Five weighted exponential components score the execution delay, task drops,
queuing backlog, execution failure and MEC payment of an epoch; their sum is
the immediate utility. The additive structure also supports splitting the
components across "virtual agents" for the decomposed learners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import ConfigError


@dataclass(frozen=True)
class UtilityBreakdown:
    """Weighted satisfaction components and the raw quantities behind them."""
    u1: float   # execution delay
    u2: float   # task drops
    u3: float   # queuing backlog
    u4: float   # failure penalty
    u5: float   # service payment
    total: float
    delay_s: float      # min(d, epoch) actually scored
    drops: int
    queuing: int
    penalty: int
    payment: float

    def components(self) -> tuple[float, float, float, float, float]:
        return (self.u1, self.u2, self.u3, self.u4, self.u5)


def task_drop(q_t: int, d: float, a_t: int, cfg) -> int:
    """Arrivals lost because the task queue would overflow this epoch."""
    removed = 1 if 0.0 < d <= cfg.epoch_s else 0
    return max(q_t - removed + a_t - cfg.task_cap, 0)


def queuing_delay(q_t: int, d: float) -> int:
    """Tasks left waiting while the epoch runs (the scheduled one excluded)."""
    return q_t - (1 if d > 0.0 else 0)


def failure_penalty(d: float, cfg) -> int:
    """1 when the execution attempt overruns the epoch."""
    return 1 if d > cfg.epoch_s else 0


def service_payment(d: float, h: float, c: int, cfg) -> float:
    """Price of server time: transmission plus remote execution, handover
    excluded; zero for local execution."""
    if c < 1:
        return 0.0
    return cfg.mec_price * (min(d, cfg.epoch_s) - h)


def utility_components(state, action, d: float, h: float, a_t: int, cfg) -> UtilityBreakdown:
    """Score one epoch given its realized delay, handover time and arrival."""
    c = action[0]
    w1, w2, w3, w4, w5 = cfg.weights
    delay = min(d, cfg.epoch_s)
    drops = task_drop(state.task_queue, d, a_t, cfg)
    queued = queuing_delay(state.task_queue, d)
    failed = failure_penalty(d, cfg)
    paid = service_payment(d, h, c, cfg)
    u1 = w1 * math.exp(-delay)
    u2 = w2 * math.exp(-drops)
    u3 = w3 * math.exp(-queued)
    u4 = w4 * math.exp(-failed)
    u5 = w5 * math.exp(-paid)
    return UtilityBreakdown(u1=u1, u2=u2, u3=u3, u4=u4, u5=u5,
                            total=u1 + u2 + u3 + u4 + u5,
                            delay_s=delay, drops=drops, queuing=queued,
                            penalty=failed, payment=paid)


def validate_pattern(pattern) -> None:
    """A pattern must partition the component labels {1..5} into groups."""
    seen = sorted(i for group in pattern for i in group)
    if seen != [1, 2, 3, 4, 5]:
        raise ConfigError(f"pattern {pattern!r} is not a partition of 1..5")


def decompose(breakdown: UtilityBreakdown, pattern) -> tuple[float, ...]:
    """Per-agent utilities: each group's weighted components summed.

    The identity 5-group pattern returns the components unchanged; any
    partition sums back to the total (up to float associativity).
    """
    validate_pattern(pattern)
    comps = breakdown.components()
    return tuple(math.fsum(comps[i - 1] for i in group) for group in pattern)
