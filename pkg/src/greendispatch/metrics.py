"""Episode metrics computed independently from dispatch logs.

Every metric walks the EpisodeLog itself (never agent-side accumulators):
energy cost from grid/storage volumes and the scenario tariff, SLA
violations from the served-vs-demand indicator, efficiency as the ratio of
directly-used renewables to served energy, cumulative reward, carbon
emissions from grid volume, and the cross-scenario success rate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .sim.types import EpisodeLog

REPORT_COLUMNS = (
    "energy_cost",
    "sla_violations",
    "sla_rate",
    "energy_efficiency",
    "cumulative_reward",
    "carbon_emissions_kg",
)


@dataclass(frozen=True)
class MetricGoals:
    efficiency_floor: float = 0.80
    sla_rate_ceiling: float = 0.02


@dataclass(frozen=True)
class MetricReport:
    energy_cost: float
    sla_violations: int
    sla_rate: float
    energy_efficiency: float
    cumulative_reward: float
    carbon_emissions_kg: float

    def meets(self, goals: MetricGoals) -> bool:
        return (
            self.energy_efficiency >= goals.efficiency_floor
            and self.sla_rate <= goals.sla_rate_ceiling
        )

    def to_csv_row(self) -> list[str]:
        return [repr(getattr(self, col)) for col in REPORT_COLUMNS]


def energy_cost(log: EpisodeLog) -> float:
    """Total expenditure: grid energy at the tariff plus storage usage."""
    series = log.scenario.series
    total = 0.0
    for entry in log.steps:
        t = entry.state.t
        o = entry.outcome
        total += o.grid_kwh * series.grid_price_per_kwh[t]
        total += o.discharge_kwh * series.storage_price_at(t)
    return total


def sla_violations(log: EpisodeLog) -> tuple[int, float]:
    """Count and rate of steps where supplied energy fell short of demand."""
    series = log.scenario.series
    dt = series.timestep_hours
    count = 0
    for entry in log.steps:
        demand_kwh = series.demand_kw[entry.state.t] * dt
        o = entry.outcome
        supplied = o.renewable_used_kwh + o.discharge_kwh + o.grid_kwh
        if demand_kwh > supplied + 1e-12:
            count += 1
    return count, count / max(len(log.steps), 1)


def energy_efficiency(log: EpisodeLog) -> float:
    """Share of served energy supplied directly by renewables."""
    renewable = 0.0
    served = 0.0
    for entry in log.steps:
        o = entry.outcome
        renewable += o.renewable_used_kwh
        served += o.renewable_used_kwh + o.discharge_kwh + o.grid_kwh
    if served <= 0.0:
        raise ValueError("episode served no energy; efficiency undefined")
    return renewable / served


def cumulative_reward(log: EpisodeLog) -> float:
    return sum(entry.outcome.reward for entry in log.steps)


def carbon_emissions(log: EpisodeLog) -> float:
    """Total kg CO2 attributed to grid energy."""
    factor = log.scenario.series.emission_factor_kg_per_kwh
    return sum(entry.outcome.grid_kwh for entry in log.steps) * factor


def report_from_log(log: EpisodeLog) -> MetricReport:
    count, rate = sla_violations(log)
    return MetricReport(
        energy_cost=energy_cost(log),
        sla_violations=count,
        sla_rate=rate,
        energy_efficiency=energy_efficiency(log),
        cumulative_reward=cumulative_reward(log),
        carbon_emissions_kg=carbon_emissions(log),
    )


def success_rate(reports: list[MetricReport], goals: MetricGoals | None = None) -> float:
    """Fraction of scenario reports meeting the efficiency and SLA goals."""
    if not reports:
        raise ValueError("success_rate needs at least one report")
    if goals is None:
        goals = MetricGoals()
    return sum(1 for r in reports if r.meets(goals)) / len(reports)
