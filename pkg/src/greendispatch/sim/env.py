"""Dispatch dynamics: per-step allocation of demand across renewables,
battery and grid, SOC update, and the reward.

Dispatch order is fixed: renewables serve demand, surplus charges the
battery (remainder curtailed), deficit is served by discharge, then by the
grid up to its capacity, and anything left is unserved (an SLA violation).
All per-step accounting is done in energy (kWh) so the arithmetic
identities hold exactly.
"""

from __future__ import annotations

from .types import (
    Action,
    EnvState,
    EpisodeLog,
    LogStep,
    Scenario,
    StepOutcome,
    setpoint_kw,
)


def reset(scenario: Scenario, seed: int = 0) -> EnvState:
    """Initial state: step 0, battery at its configured initial SOC.

    The dynamics are deterministic; the seed only tags episode logs.
    """
    del seed
    return EnvState(t=0, soc_kwh=scenario.battery.initial_soc_kwh, done=False)


def step(state: EnvState, action: Action, scenario: Scenario) -> tuple[EnvState, StepOutcome]:
    """Advance one step; returns the new state and the step's accounting."""
    if state.done:
        raise RuntimeError("cannot step a finished episode")
    series = scenario.series
    battery = scenario.battery
    t = state.t
    if not 0 <= t < len(series):
        raise IndexError(f"step index {t} outside horizon {len(series)}")

    dt = series.timestep_hours
    demand_kwh = series.demand_kw[t] * dt
    renew_kwh = series.renewable_kw(t) * dt
    requested_kw = setpoint_kw(action, scenario.action_levels, battery)

    # 1. Renewables serve demand.
    renewable_used = min(renew_kwh, demand_kwh)
    surplus_kwh = renew_kwh - renewable_used
    deficit_kwh = demand_kwh - renewable_used

    # 2. Surplus charges the battery within setpoint, rating and headroom.
    headroom_kwh = battery.soc_max_kwh - state.soc_kwh
    charge_cap_kwh = min(
        battery.max_charge_kw * dt,
        headroom_kwh / battery.charge_eff,
    )
    charge_request_kwh = min(max(requested_kw, 0.0) * dt, charge_cap_kwh)
    charge_from_surplus = min(charge_request_kwh, surplus_kwh)
    curtailed = surplus_kwh - charge_from_surplus

    # 3. Deficit served by discharge within setpoint, rating and stored energy.
    avail_kwh = battery.discharge_eff * (state.soc_kwh - battery.soc_min_kwh)
    discharge_cap_kwh = min(battery.max_discharge_kw * dt, avail_kwh)
    discharge = min(max(-requested_kw, 0.0) * dt, discharge_cap_kwh, deficit_kwh)
    deficit_after_battery = deficit_kwh - discharge

    # 4. Grid serves the remaining deficit up to its capacity.
    grid_cap_kwh = series.grid_cap_kw[t] * dt
    grid_for_demand = min(deficit_after_battery, grid_cap_kwh)

    # Optional grid charging tops the battery up to the setpoint request.
    charge_from_grid = 0.0
    if scenario.allow_grid_charging:
        remaining_request = charge_request_kwh - charge_from_surplus
        grid_left = grid_cap_kwh - grid_for_demand
        charge_from_grid = min(remaining_request, grid_left)

    # 5. Anything still uncovered is unserved demand.
    unserved = deficit_after_battery - grid_for_demand
    grid_kwh = grid_for_demand + charge_from_grid
    charge_kwh = charge_from_surplus + charge_from_grid

    soc = state.soc_kwh + battery.charge_eff * charge_kwh - discharge / battery.discharge_eff
    # Guard against float dust at the exact bounds.
    soc = min(max(soc, battery.soc_min_kwh), battery.soc_max_kwh)

    price = series.grid_price_per_kwh[t]
    energy_cost = price * grid_kwh + series.storage_price_at(t) * discharge
    emissions = grid_kwh * series.emission_factor_kg_per_kwh
    w = scenario.weights
    reward = -(w.alpha * energy_cost + w.beta * emissions) - w.sla_penalty * unserved

    outcome = StepOutcome(
        renewable_used_kwh=renewable_used,
        curtailed_kwh=curtailed,
        charge_kwh=charge_kwh,
        discharge_kwh=discharge,
        grid_kwh=grid_kwh,
        unserved_kwh=unserved,
        energy_cost=energy_cost,
        emissions_kg=emissions,
        sla_violated=unserved > 0.0,
        reward=reward,
    )
    new_state = EnvState(t=t + 1, soc_kwh=soc, done=t + 1 >= len(series))
    return new_state, outcome


class DispatchEnv:
    """Stateful wrapper around the pure dynamics that keeps an episode log."""

    def __init__(self, scenario: Scenario, seed: int = 0):
        self.scenario = scenario
        self.seed = seed
        self.state = reset(scenario, seed)
        self.log = EpisodeLog(scenario=scenario, seed=seed)

    def reset(self, seed: int | None = None) -> EnvState:
        if seed is not None:
            self.seed = seed
        self.state = reset(self.scenario, self.seed)
        self.log = EpisodeLog(scenario=self.scenario, seed=self.seed)
        return self.state

    def step(self, action: Action) -> tuple[EnvState, StepOutcome]:
        prev = self.state
        new_state, outcome = step(prev, action, self.scenario)
        self.log.steps.append(LogStep(state=prev, action=action, outcome=outcome))
        self.log.final_state = new_state
        self.state = new_state
        return new_state, outcome

    @property
    def done(self) -> bool:
        return self.state.done


def replay(scenario: Scenario, actions: list[Action], seed: int = 0) -> EpisodeLog:
    """Run a fixed action sequence through the dynamics and return the log."""
    env = DispatchEnv(scenario, seed=seed)
    for action in actions:
        env.step(action)
    return env.log
