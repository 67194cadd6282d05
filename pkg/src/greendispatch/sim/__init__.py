"""Environment dynamics, constraints, reward and the optimal-dispatch oracle."""

from .env import DispatchEnv, replay, reset, step
from .io import (
    default_battery,
    load_episode_jsonl,
    load_scenario,
    save_episode_jsonl,
    scenario_from_series,
)
from .oracle import dp_optimal_dispatch, replay_cost_snapped, soc_grid, truncated
from .types import (
    Action,
    BatterySpec,
    EnvState,
    EpisodeLog,
    ExogenousSeries,
    LoadModel,
    LogStep,
    RewardWeights,
    Scenario,
    StepOutcome,
    UNTUNED_WEIGHTS,
    demand_at,
    idle_index,
    renewable_at,
    setpoint_kw,
)
from .validate import Violation, validate_constraints

__all__ = [
    "Action",
    "BatterySpec",
    "DispatchEnv",
    "EnvState",
    "EpisodeLog",
    "ExogenousSeries",
    "LoadModel",
    "LogStep",
    "RewardWeights",
    "Scenario",
    "StepOutcome",
    "UNTUNED_WEIGHTS",
    "Violation",
    "default_battery",
    "demand_at",
    "dp_optimal_dispatch",
    "idle_index",
    "load_episode_jsonl",
    "load_scenario",
    "renewable_at",
    "replay",
    "replay_cost_snapped",
    "reset",
    "save_episode_jsonl",
    "scenario_from_series",
    "setpoint_kw",
    "soc_grid",
    "step",
    "truncated",
    "validate_constraints",
]
