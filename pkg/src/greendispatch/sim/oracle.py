"""Exact small-instance optimal dispatch via dynamic programming on a
discretized SOC grid.

The oracle minimizes the summed grid + storage cost (the objective the
reward's cost term is built from) over the same dispatch semantics as
``env.step``, with the battery SOC snapped to the nearest grid point after
every transition. It is a tabular method: instances are capped to keep the
table small.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .env import step
from .types import Action, EnvState, Scenario

MAX_HORIZON = 200
MAX_SOC_LEVELS = 101
MAX_ACTION_LEVELS = 11


def soc_grid(scenario: Scenario, soc_levels: int) -> np.ndarray:
    b = scenario.battery
    return np.linspace(b.soc_min_kwh, b.soc_max_kwh, soc_levels)


def _snap_index(grid: np.ndarray, soc: float) -> int:
    return int(np.argmin(np.abs(grid - soc)))


def dp_optimal_dispatch(
    scenario: Scenario, soc_levels: int, horizon: int | None = None
) -> tuple[float, list[Action]]:
    """Minimum total energy cost and an optimal action sequence.

    Exact for the snapped-SOC system: replaying the returned actions with
    ``replay_cost_snapped`` reproduces the returned cost to within 1e-6.
    """
    if horizon is None:
        horizon = scenario.horizon
    if horizon > MAX_HORIZON:
        raise ValueError(f"horizon {horizon} exceeds oracle cap {MAX_HORIZON}")
    if soc_levels > MAX_SOC_LEVELS:
        raise ValueError(f"soc_levels {soc_levels} exceeds oracle cap {MAX_SOC_LEVELS}")
    if scenario.action_levels > MAX_ACTION_LEVELS:
        raise ValueError(
            f"action_levels {scenario.action_levels} exceeds oracle cap {MAX_ACTION_LEVELS}"
        )
    if horizon > scenario.horizon:
        raise ValueError("horizon exceeds scenario series length")

    grid = soc_grid(scenario, soc_levels)
    n_actions = scenario.action_levels

    # Transition tables: cost and next grid index per (t, soc index, action).
    cost = np.empty((horizon, soc_levels, n_actions))
    nxt = np.empty((horizon, soc_levels, n_actions), dtype=np.int64)
    for t in range(horizon):
        for s, soc in enumerate(grid):
            state = EnvState(t=t, soc_kwh=float(soc), done=False)
            for a in range(n_actions):
                new_state, outcome = step(state, Action(a), scenario)
                cost[t, s, a] = outcome.energy_cost
                nxt[t, s, a] = _snap_index(grid, new_state.soc_kwh)

    value = np.zeros(soc_levels)
    best = np.empty((horizon, soc_levels), dtype=np.int64)
    for t in range(horizon - 1, -1, -1):
        q = cost[t] + value[nxt[t]]
        best[t] = np.argmin(q, axis=1)
        value = q[np.arange(soc_levels), best[t]]

    s = _snap_index(grid, scenario.battery.initial_soc_kwh)
    total = float(value[s])
    actions: list[Action] = []
    for t in range(horizon):
        a = int(best[t, s])
        actions.append(Action(a))
        s = int(nxt[t, s, a])
    return total, actions


def replay_cost_snapped(
    scenario: Scenario, actions: list[Action], soc_levels: int
) -> float:
    """Total energy cost of an action sequence with SOC snapped to the grid
    after every step (the discretized system the DP optimizes)."""
    grid = soc_grid(scenario, soc_levels)
    soc = float(grid[_snap_index(grid, scenario.battery.initial_soc_kwh)])
    total = 0.0
    for t, action in enumerate(actions):
        state = EnvState(t=t, soc_kwh=soc, done=False)
        new_state, outcome = step(state, action, scenario)
        total += outcome.energy_cost
        soc = float(grid[_snap_index(grid, new_state.soc_kwh)])
    return total


def truncated(scenario: Scenario, horizon: int) -> Scenario:
    """Scenario restricted to its first ``horizon`` steps."""
    s = scenario.series
    sliced = replace(
        s,
        demand_kw=s.demand_kw[:horizon],
        solar_kw=s.solar_kw[:horizon],
        wind_kw=s.wind_kw[:horizon],
        grid_price_per_kwh=s.grid_price_per_kwh[:horizon],
        storage_price_per_kwh=(
            s.storage_price_per_kwh[:horizon]
            if isinstance(s.storage_price_per_kwh, tuple)
            else s.storage_price_per_kwh
        ),
        grid_cap_kw=s.grid_cap_kw[:horizon],
    )
    return replace(scenario, series=sliced)
