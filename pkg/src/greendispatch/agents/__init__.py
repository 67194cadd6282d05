"""PPO controller, baselines and ablation switches."""

from .baselines import (
    HeuristicAgent,
    QLearner,
    StateBinning,
    TabularPolicy,
    heuristic_act,
    make_binning,
    rule_based_act,
    tabular_q_act,
    tabular_q_train,
)
from .observation import (
    DEFAULT_FORECAST_HORIZON,
    DEFAULT_WINDOW,
    ObservationBuilder,
    build_observation,
    feature_count,
)
from .ppo import (
    AblationFlags,
    CurvePoint,
    PPOConfig,
    RolloutBuffer,
    TrainResult,
    act,
    collect_rollout,
    compute_gae,
    default_net_config,
    fit_forecaster,
    ppo_update,
    run_episode,
    train,
)

__all__ = [
    "AblationFlags",
    "CurvePoint",
    "DEFAULT_FORECAST_HORIZON",
    "DEFAULT_WINDOW",
    "HeuristicAgent",
    "ObservationBuilder",
    "PPOConfig",
    "QLearner",
    "RolloutBuffer",
    "StateBinning",
    "TabularPolicy",
    "TrainResult",
    "act",
    "build_observation",
    "collect_rollout",
    "compute_gae",
    "default_net_config",
    "feature_count",
    "fit_forecaster",
    "heuristic_act",
    "make_binning",
    "ppo_update",
    "rule_based_act",
    "run_episode",
    "tabular_q_act",
    "tabular_q_train",
    "train",
]
