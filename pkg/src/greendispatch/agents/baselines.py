"""Comparison baselines: rule-based thresholds, a myopic cost-greedy
heuristic, and tabular Q-learning over a coarse discretized state."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .. import forecast as fc
from ..sim.env import DispatchEnv, step
from ..sim.types import (
    Action,
    BatterySpec,
    EnvState,
    ExogenousSeries,
    Scenario,
    idle_index,
    setpoint_kw,
)

RULE_SOC_GUARD = 0.25  # rule-based keeps this fraction of the SOC range in reserve


def rule_based_act(state: EnvState, scenario: Scenario) -> Action:
    """Fixed thresholds: charge at max on surplus, discharge at max on
    deficit while SOC is above the guard fraction, otherwise idle."""
    series = scenario.series
    t = state.t
    renew = series.renewable_kw(t)
    demand = series.demand_kw[t]
    battery = scenario.battery
    k = scenario.action_levels
    if renew > demand:
        return Action(k - 1)  # max charge
    if renew < demand:
        guard = battery.soc_min_kwh + RULE_SOC_GUARD * battery.usable_kwh
        if state.soc_kwh > guard:
            return Action(0)  # max discharge
    return Action(idle_index(k))


def _one_step_scenario(scenario: Scenario, t: int, renew_kw: float, soc: float) -> Scenario:
    series = scenario.series
    mini = ExogenousSeries(
        timestep_hours=series.timestep_hours,
        demand_kw=(series.demand_kw[t],),
        solar_kw=(max(renew_kw, 0.0),),
        wind_kw=(0.0,),
        grid_price_per_kwh=(series.grid_price_per_kwh[t],),
        storage_price_per_kwh=series.storage_price_at(t),
        grid_cap_kw=(series.grid_cap_kw[t],),
        emission_factor_kg_per_kwh=series.emission_factor_kg_per_kwh,
    )
    battery = replace(scenario.battery, initial_soc_kwh=soc)
    return replace(scenario, series=mini, battery=battery)


def heuristic_act(
    state: EnvState,
    scenario: Scenario,
    forecaster: fc.ForecastModel | None = None,
    renew_history: list[float] | None = None,
) -> Action:
    """Myopic cost-greedy choice over all setpoints.

    Evaluates each setpoint's immediate weighted cost (grid + storage +
    emissions + unserved penalty) on a one-step instance whose renewables
    come from a one-step forecast when available, minus a credit for
    banked surplus energy valued at the mean grid price. Ties break
    toward idle, then toward the lower index.
    """
    series = scenario.series
    t = state.t
    renew_est = series.renewable_kw(t)
    if forecaster is not None and renew_history:
        if len(renew_history) >= forecaster.required_history:
            renew_est = fc.predict(forecaster, renew_history, 1)[0]
    mini = _one_step_scenario(scenario, t, renew_est, state.soc_kwh)
    w = scenario.weights
    mean_price = sum(series.grid_price_per_kwh) / len(series)
    battery = scenario.battery
    credit = w.alpha * mean_price * battery.charge_eff * battery.discharge_eff

    k = scenario.action_levels
    mid = idle_index(k)
    best_action = mid
    best_cost = None
    order = sorted(range(k), key=lambda a: (abs(a - mid), a))
    for a in order:
        _, outcome = step(EnvState(t=0, soc_kwh=state.soc_kwh), Action(a), mini)
        cost = (
            w.alpha * outcome.energy_cost
            + w.beta * outcome.emissions_kg
            + w.sla_penalty * outcome.unserved_kwh
            - credit * outcome.charge_kwh
        )
        if best_cost is None or cost < best_cost - 1e-12:
            best_cost = cost
            best_action = a
    return Action(best_action)


class HeuristicAgent:
    """Stateful wrapper tracking renewable history for the forecaster."""

    def __init__(self, scenario: Scenario, forecaster: fc.ForecastModel | None = None):
        self.scenario = scenario
        self.forecaster = forecaster
        self._history: list[float] = []

    def act(self, state: EnvState) -> Action:
        action = heuristic_act(state, self.scenario, self.forecaster, self._history)
        self._history.append(self.scenario.series.renewable_kw(state.t))
        return action


class QLearner:
    """Plain one-step Q-learning over integer states and actions."""

    def __init__(
        self,
        n_states: int,
        n_actions: int,
        learning_rate: float = 0.1,
        discount: float = 0.99,
    ):
        if n_states < 1 or n_actions < 2:
            raise ValueError("need n_states >= 1 and n_actions >= 2")
        self.q = np.zeros((n_states, n_actions))
        self.learning_rate = learning_rate
        self.discount = discount

    def update(self, s: int, a: int, reward: float, s_next: int, done: bool) -> None:
        target = reward
        if not done:
            target += self.discount * float(np.max(self.q[s_next]))
        self.q[s, a] += self.learning_rate * (target - self.q[s, a])

    def act_greedy(self, s: int) -> int:
        return int(np.argmax(self.q[s]))

    def act_epsilon(self, s: int, epsilon: float, rng: np.random.Generator) -> int:
        if rng.random() < epsilon:
            return int(rng.integers(self.q.shape[1]))
        return self.act_greedy(s)


@dataclass(frozen=True)
class StateBinning:
    """Coarse state discretization: SOC bins x renewable/demand ratio bins
    x grid price terciles."""

    soc_bins: int
    ratio_edges: tuple[float, ...]
    price_edges: tuple[float, ...]  # tercile boundaries from the series

    @property
    def n_states(self) -> int:
        return self.soc_bins * (len(self.ratio_edges) + 1) * (len(self.price_edges) + 1)

    def index(self, state: EnvState, scenario: Scenario) -> int:
        battery = scenario.battery
        frac = (state.soc_kwh - battery.soc_min_kwh) / battery.usable_kwh
        soc_bin = min(int(frac * self.soc_bins), self.soc_bins - 1)
        series = scenario.series
        t = state.t
        demand = max(series.demand_kw[t], 1e-9)
        ratio = series.renewable_kw(t) / demand
        ratio_bin = sum(1 for edge in self.ratio_edges if ratio >= edge)
        price = series.grid_price_per_kwh[t]
        price_bin = sum(1 for edge in self.price_edges if price >= edge)
        n_ratio = len(self.ratio_edges) + 1
        n_price = len(self.price_edges) + 1
        return (soc_bin * n_ratio + ratio_bin) * n_price + price_bin


def make_binning(scenarios: list[Scenario], soc_bins: int = 6) -> StateBinning:
    if soc_bins < 2:
        raise ValueError("need at least 2 SOC bins")
    prices: list[float] = []
    for s in scenarios:
        prices.extend(s.series.grid_price_per_kwh)
    prices.sort()
    lo = prices[len(prices) // 3]
    hi = prices[2 * len(prices) // 3]
    return StateBinning(soc_bins=soc_bins, ratio_edges=(0.75, 1.0), price_edges=(lo, hi))


@dataclass
class TabularPolicy:
    learner: QLearner
    binning: StateBinning

    def act(self, state: EnvState, scenario: Scenario) -> Action:
        return Action(self.learner.act_greedy(self.binning.index(state, scenario)))


def tabular_q_train(
    scenarios: list[Scenario],
    episodes: int = 300,
    soc_bins: int = 6,
    seed: int = 0,
    learning_rate: float = 0.1,
    discount: float = 0.99,
    epsilon_start: float = 1.0,
    epsilon_end: float = 0.05,
) -> TabularPolicy:
    """Q-learning with epsilon-greedy exploration decayed linearly over
    episodes, visiting the scenario set round-robin."""
    if not scenarios:
        raise ValueError("need at least one scenario")
    binning = make_binning(scenarios, soc_bins=soc_bins)
    n_actions = scenarios[0].action_levels
    learner = QLearner(binning.n_states, n_actions, learning_rate, discount)
    rng = np.random.default_rng(seed)
    for ep in range(episodes):
        scenario = scenarios[ep % len(scenarios)]
        if episodes > 1:
            epsilon = epsilon_start + (epsilon_end - epsilon_start) * ep / (episodes - 1)
        else:
            epsilon = epsilon_end
        env = DispatchEnv(scenario, seed=seed)
        s = binning.index(env.state, scenario)
        while not env.done:
            a = learner.act_epsilon(s, epsilon, rng)
            state, outcome = env.step(Action(a))
            if env.done:
                learner.update(s, a, outcome.reward, 0, True)
            else:
                s_next = binning.index(state, scenario)
                learner.update(s, a, outcome.reward, s_next, False)
                s = s_next
    return TabularPolicy(learner=learner, binning=binning)


def tabular_q_act(policy: TabularPolicy, state: EnvState, scenario: Scenario) -> Action:
    return policy.act(state, scenario)
