"""Constraint checking over episode logs. Reports violations, never raises."""

from __future__ import annotations

from dataclasses import dataclass

from .types import EnvState, EpisodeLog, Scenario

_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    t: int
    kind: str  # "soc_below" | "soc_above" | "supply_shortfall"
    detail: str


def _check_soc(state: EnvState, scenario: Scenario, out: list[Violation]) -> None:
    b = scenario.battery
    if state.soc_kwh < b.soc_min_kwh - _TOL:
        out.append(
            Violation(state.t, "soc_below", f"SOC {state.soc_kwh} < {b.soc_min_kwh}")
        )
    elif state.soc_kwh > b.soc_max_kwh + _TOL:
        out.append(
            Violation(state.t, "soc_above", f"SOC {state.soc_kwh} > {b.soc_max_kwh}")
        )


def validate_constraints(log: EpisodeLog, scenario: Scenario | None = None) -> list[Violation]:
    """Check SOC bounds and supply adequacy for every logged step.

    Supply adequacy treats stored energy as available discharge power
    (bounded by the rating and the energy above the SOC floor): a step
    where the recorded supply falls short of demand is reported as a
    shortfall violation.
    """
    if scenario is None:
        scenario = log.scenario
    series = scenario.series
    violations: list[Violation] = []
    for entry in log.steps:
        _check_soc(entry.state, scenario, violations)
        t = entry.state.t
        o = entry.outcome
        demand_kwh = series.demand_kw[t] * series.timestep_hours
        supplied = o.renewable_used_kwh + o.discharge_kwh + o.grid_kwh
        if supplied + _TOL < demand_kwh:
            violations.append(
                Violation(
                    t,
                    "supply_shortfall",
                    f"supplied {supplied} kWh < demand {demand_kwh} kWh",
                )
            )
    if log.final_state is not None:
        _check_soc(log.final_state, scenario, violations)
    return violations
