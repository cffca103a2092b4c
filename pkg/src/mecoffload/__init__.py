"""Stochastic computation offloading in a multi-BS edge-computing system:
environment, exact solvers, deep learners, baselines, and experiment runs."""

from .config import (ConfigError, K4_PATTERN, K5_PATTERN, SystemConfig,
                     default_config, load_config, save_config, tiny_config,
                     with_params)
from .env import (JointAction, MecEnv, NetworkState, StepOutcome,
                  encode_state, index_action, action_index, num_actions,
                  space_sizes)
from .harness import ExperimentSpec, MetricsSeries, run_experiment, sweep
from .utility import UtilityBreakdown, decompose, utility_components

__all__ = [
    "ConfigError", "K4_PATTERN", "K5_PATTERN", "SystemConfig",
    "default_config", "load_config", "save_config", "tiny_config",
    "with_params", "JointAction", "MecEnv", "NetworkState", "StepOutcome",
    "encode_state", "index_action", "action_index", "num_actions",
    "space_sizes", "ExperimentSpec", "MetricsSeries", "run_experiment",
    "sweep", "UtilityBreakdown", "decompose", "utility_components",
]

__version__ = "0.1.0"
