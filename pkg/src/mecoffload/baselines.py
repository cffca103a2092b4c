"""Fixed comparison policies: mobile-only, server-only, and delay-greedy.

All three are stateless functions of the current network state; they never
emit infeasible actions (energy beyond the battery, or spending with an
empty task queue).
"""

from __future__ import annotations

import math

from .env import JointAction
from .link import handover_delay, local_solution, solve_transmit_time

NOOP = JointAction(0, 0)


def _local_unit_cap(cfg) -> int:
    """Largest unit count whose uncapped CPU frequency stays within the
    hardware maximum; allocating more would only burn energy."""
    return int(math.floor(cfg.capacitance * cfg.task_cycles
                          * cfg.cpu_freq_max_hz ** 2 / cfg.energy_unit_j))


def mobile_execution_policy(state, cfg) -> JointAction:
    """Always compute locally, with as much useful energy as available."""
    if state.task_queue == 0 or state.energy_queue == 0:
        return NOOP
    e = min(state.energy_queue, _local_unit_cap(cfg))
    return JointAction(0, e) if e > 0 else NOOP


def _best_server_action(state, cfg):
    """Per-BS energy choice and delay for the offload branch.

    For each BS the policy wants the largest allocation whose constant-rate
    solution respects the transmit power limit, settling for one unit at
    capped power when none does; the BS with the smallest total delay wins,
    lowest index on ties. Returns (delay, action) or (inf, NOOP) when every
    link is infeasible.
    """
    best_d, best = math.inf, NOOP
    for b in range(1, cfg.num_bs + 1):
        gain_db = cfg.gain_levels_db[b - 1][state.gain_idx[b - 1]]
        chosen = None
        for e in range(state.energy_queue, 0, -1):
            sol = solve_transmit_time(gain_db, e, cfg)
            if sol.feasible and not sol.power_capped:
                chosen = (e, sol)
                break
        if chosen is None:
            sol = solve_transmit_time(gain_db, 1, cfg)
            if not sol.feasible:
                continue
            chosen = (1, sol)
        e, sol = chosen
        d = handover_delay(b, state.assoc, cfg) + sol.d_tr_s + cfg.server_s
        if d < best_d:
            best_d, best = d, JointAction(b, e)
    return best_d, best


def server_execution_policy(state, cfg) -> JointAction:
    """Always offload, through the BS that minimizes the execution delay."""
    if state.task_queue == 0 or state.energy_queue == 0:
        return NOOP
    _, action = _best_server_action(state, cfg)
    return action


def greedy_execution_policy(state, cfg) -> JointAction:
    """Pick whichever of the two execution branches finishes sooner this
    epoch; exact ties go to the local CPU."""
    if state.task_queue == 0 or state.energy_queue == 0:
        return NOOP
    local_action = mobile_execution_policy(state, cfg)
    local_d = (local_solution(local_action.energy, cfg).d_mobile_s
               if local_action.energy > 0 else math.inf)
    server_d, server_action = _best_server_action(state, cfg)
    if local_d <= server_d and local_action.energy > 0:
        return local_action
    if server_action.energy > 0:
        return server_action
    return local_action if local_action.energy > 0 else NOOP
