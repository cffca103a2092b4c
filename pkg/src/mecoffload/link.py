"""Single-epoch radio and compute primitives.

Pure functions for the CPU-frequency / local-delay tradeoff, the minimum
uplink transmission time at a constant rate (a transcendental fixed point
solved by bisection), handover cost, and the total execution delay of one
scheduled task.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from functools import lru_cache

LN2 = math.log(2.0)
_X_TOL = 1e-12          # absolute bisection tolerance on x = 1/d_tr


@dataclass(frozen=True)
class LocalSolution:
    """CPU allocation for on-device execution of one task."""
    freq_hz: float
    d_mobile_s: float
    freq_capped: bool


@dataclass(frozen=True)
class TransmitSolution:
    """Constant-rate uplink transmission of one task's input data.

    `feasible` is False when the rate equation has no positive solution;
    then d_tr_s is +inf and the transmission never completes.
    """
    d_tr_s: float
    rate_bps: float
    power_w: float
    power_capped: bool
    energy_spent_j: float
    feasible: bool = True


def db_to_linear(gain_db: float) -> float:
    return 10.0 ** (gain_db / 10.0)


def local_solution(e_units: int, cfg) -> LocalSolution:
    """Frequency and delay when e_units of energy run the local CPU.

    The frequency grows with the square root of the allocated energy and is
    clipped at the hardware maximum; the full allocation is consumed either
    way.
    """
    if e_units < 1:
        raise ValueError("local execution needs at least one energy unit")
    return _local_cached(e_units, cfg.energy_unit_j, cfg.capacitance,
                         cfg.task_cycles, cfg.cpu_freq_max_hz)


@lru_cache(maxsize=4096)
def _local_cached(e_units, unit_j, capacitance, cycles, freq_max):
    raw = math.sqrt(e_units * unit_j / (capacitance * cycles))
    freq = min(raw, freq_max)
    return LocalSolution(freq_hz=freq, d_mobile_s=cycles / freq,
                         freq_capped=raw > freq_max)


def solve_transmit_time(gain_db: float, e_units: int, cfg) -> TransmitSolution:
    """Minimum time to push the task input uplink with e_units of energy.

    Solves log2(1 + (g*E/I)*x) = (mu/W)*x for the largest root x = 1/d_tr;
    the implied constant transmit power is E*x. If that exceeds the device
    maximum, the link instead runs at maximum power with the rate fixed by
    the channel, and only part of the allocation is radiated.
    """
    if e_units < 1:
        raise ValueError("transmission needs at least one energy unit")
    return _transmit_cached(gain_db, e_units, cfg.energy_unit_j,
                            cfg.bandwidth_hz, cfg.noise_w, cfg.input_bits,
                            cfg.tx_power_max_w)


@lru_cache(maxsize=65536)
def _transmit_cached(gain_db, e_units, unit_j, bandwidth, noise, bits, p_max):
    gain = db_to_linear(gain_db)
    energy = e_units * unit_j
    a = gain * energy / noise          # log-side slope scale
    m = bits / bandwidth               # linear-side slope
    x = _largest_root(a, m)
    if x is None:
        return TransmitSolution(d_tr_s=math.inf, rate_bps=0.0, power_w=0.0,
                                power_capped=False, energy_spent_j=0.0,
                                feasible=False)
    power = energy * x
    if power > p_max:
        rate = bandwidth * math.log2(1.0 + gain * p_max / noise)
        d_tr = bits / rate
        return TransmitSolution(d_tr_s=d_tr, rate_bps=rate, power_w=p_max,
                                power_capped=True, energy_spent_j=p_max * d_tr)
    return TransmitSolution(d_tr_s=1.0 / x, rate_bps=bits * x, power_w=power,
                            power_capped=False, energy_spent_j=energy)


def _largest_root(a: float, m: float):
    """Largest x > 0 with log2(1 + a*x) = m*x, or None if only x = 0 solves it.

    A positive root exists iff the curve leaves the origin steeper than the
    line (a/ln2 > m). It is bracketed between machine epsilon and the point
    where the chord slope of the log has fallen to m.
    """
    if a / LN2 <= m:
        return None

    def resid(x):
        return math.log1p(a * x) / LN2 - m * x

    lo = sys.float_info.epsilon
    hi = a / (m * LN2) + 1.0
    while resid(hi) >= 0.0:            # defensive; the bound holds analytically
        hi *= 2.0
    while hi - lo > _X_TOL:
        mid = 0.5 * (lo + hi)
        if resid(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def handover_delay(c: int, assoc: int, cfg) -> float:
    """Signalling delay paid when offloading through a BS other than the
    currently associated one."""
    return cfg.handover_s if (c >= 1 and c != assoc) else 0.0


def execution_delay(state, action, cfg):
    """Total delay of the epoch's execution attempt.

    Returns (d, parts) where parts carries the handover time and whichever
    of LocalSolution / TransmitSolution applies. Zero energy means nothing
    runs (d = 0); callers are expected to have screened feasibility against
    the queues already.
    """
    c, e = action
    if e == 0:
        return 0.0, {"handover_s": 0.0, "local": None, "transmit": None}
    if c == 0:
        sol = local_solution(e, cfg)
        return sol.d_mobile_s, {"handover_s": 0.0, "local": sol, "transmit": None}
    gain_db = cfg.gain_levels_db[c - 1][state.gain_idx[c - 1]]
    tr = solve_transmit_time(gain_db, e, cfg)
    h = handover_delay(c, state.assoc, cfg)
    d = h + tr.d_tr_s + cfg.server_s if tr.feasible else math.inf
    return d, {"handover_s": h, "local": None, "transmit": tr}
