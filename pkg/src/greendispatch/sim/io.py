"""Scenario files and episode-log serialization.

Scenario files are key = value text referencing a trace CSV; episode logs
are JSON lines, one step per line, with StepOutcome field names verbatim.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..kvconfig import parse_bool, parse_kv_file
from ..traces.records import load_csv
from .types import (
    DEFAULT_GRID_CAP_FACTOR,
    Action,
    BatterySpec,
    EnvState,
    EpisodeLog,
    ExogenousSeries,
    LogStep,
    RewardWeights,
    Scenario,
    StepOutcome,
)

_OUTCOME_FIELDS = (
    "renewable_used_kwh",
    "curtailed_kwh",
    "charge_kwh",
    "discharge_kwh",
    "grid_kwh",
    "unserved_kwh",
    "energy_cost",
    "emissions_kg",
    "sla_violated",
    "reward",
)


def default_battery() -> BatterySpec:
    """Battery sized for the ~100 kW synthetic demand profiles."""
    return BatterySpec(
        soc_min_kwh=20.0,
        soc_max_kwh=220.0,
        charge_eff=0.95,
        discharge_eff=0.95,
        max_charge_kw=80.0,
        max_discharge_kw=80.0,
        initial_soc_kwh=120.0,
    )


def scenario_from_series(
    series: ExogenousSeries,
    label: str,
    battery: BatterySpec | None = None,
    weights: RewardWeights | None = None,
    action_levels: int = 11,
    allow_grid_charging: bool = False,
) -> Scenario:
    return Scenario(
        series=series,
        battery=battery if battery is not None else default_battery(),
        weights=weights if weights is not None else RewardWeights(),
        label=label,
        action_levels=action_levels,
        allow_grid_charging=allow_grid_charging,
    )


_SCENARIO_KEYS = {
    "traces",
    "label",
    "dt_hours",
    "soc_min_kwh",
    "soc_max_kwh",
    "charge_eff",
    "discharge_eff",
    "max_charge_kw",
    "max_discharge_kw",
    "initial_soc_kwh",
    "storage_price_per_kwh",
    "emission_factor",
    "grid_cap_kw",
    "grid_cap_factor",
    "alpha",
    "beta",
    "sla_penalty",
    "action_levels",
    "allow_grid_charging",
}


def load_scenario(path: str | Path) -> Scenario:
    """Build a Scenario from a key = value file referencing a trace CSV."""
    path = Path(path)
    pairs = parse_kv_file(path)
    for key in pairs:
        if key not in _SCENARIO_KEYS:
            raise ValueError(f"{path}: unknown scenario key {key!r}")
    if "traces" not in pairs:
        raise ValueError(f"{path}: missing required key 'traces'")
    csv_path = (path.parent / pairs["traces"]).resolve()
    records = load_csv(csv_path)
    if any(
        r.solar_kw is None
        or r.wind_kw is None
        or r.demand_kw is None
        or r.grid_price_per_kwh is None
        for r in records
    ):
        raise ValueError(f"{csv_path}: trace has missing values; run the preprocess pipeline first")

    def num(key: str, default: float) -> float:
        return float(pairs[key]) if key in pairs else default

    dt_hours = num("dt_hours", 0.25)
    demand = tuple(r.demand_kw for r in records)
    if "grid_cap_kw" in pairs:
        cap = tuple(float(pairs["grid_cap_kw"]) for _ in records)
    else:
        factor = num("grid_cap_factor", DEFAULT_GRID_CAP_FACTOR)
        peak = max(demand)
        cap = tuple(factor * peak for _ in records)
    series = ExogenousSeries(
        timestep_hours=dt_hours,
        demand_kw=demand,
        solar_kw=tuple(r.solar_kw for r in records),
        wind_kw=tuple(r.wind_kw for r in records),
        grid_price_per_kwh=tuple(r.grid_price_per_kwh for r in records),
        storage_price_per_kwh=num("storage_price_per_kwh", 0.10),
        grid_cap_kw=cap,
        emission_factor_kg_per_kwh=num("emission_factor", 0.4),
    )
    default = default_battery()
    battery = BatterySpec(
        soc_min_kwh=num("soc_min_kwh", default.soc_min_kwh),
        soc_max_kwh=num("soc_max_kwh", default.soc_max_kwh),
        charge_eff=num("charge_eff", default.charge_eff),
        discharge_eff=num("discharge_eff", default.discharge_eff),
        max_charge_kw=num("max_charge_kw", default.max_charge_kw),
        max_discharge_kw=num("max_discharge_kw", default.max_discharge_kw),
        initial_soc_kwh=num("initial_soc_kwh", default.initial_soc_kwh),
    )
    weights = RewardWeights(
        alpha=num("alpha", 1.0),
        beta=num("beta", 0.5),
        sla_penalty=num("sla_penalty", 10.0),
    )
    return Scenario(
        series=series,
        battery=battery,
        weights=weights,
        label=pairs.get("label", path.stem),
        action_levels=int(num("action_levels", 11)),
        allow_grid_charging=(
            parse_bool(pairs["allow_grid_charging"], "allow_grid_charging")
            if "allow_grid_charging" in pairs
            else False
        ),
    )


def save_episode_jsonl(log: EpisodeLog, path: str | Path) -> None:
    """One JSON object per step: state fields, action index, outcome fields."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for entry in log.steps:
            row: dict[str, object] = {
                "t": entry.state.t,
                "soc_kwh": entry.state.soc_kwh,
                "battery_setpoint_index": entry.action.battery_setpoint_index,
            }
            for name in _OUTCOME_FIELDS:
                row[name] = getattr(entry.outcome, name)
            fh.write(json.dumps(row) + "\n")


def load_episode_jsonl(path: str | Path, scenario: Scenario) -> EpisodeLog:
    """Rebuild an episode log from JSON lines; the final state is derived
    from the last step's accounting."""
    path = Path(path)
    log = EpisodeLog(scenario=scenario, seed=0)
    battery = scenario.battery
    last_state: EnvState | None = None
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            state = EnvState(t=int(row["t"]), soc_kwh=float(row["soc_kwh"]), done=False)
            outcome = StepOutcome(**{name: row[name] for name in _OUTCOME_FIELDS})
            log.steps.append(
                LogStep(
                    state=state,
                    action=Action(int(row["battery_setpoint_index"])),
                    outcome=outcome,
                )
            )
            soc = (
                state.soc_kwh
                + battery.charge_eff * outcome.charge_kwh
                - outcome.discharge_kwh / battery.discharge_eff
            )
            soc = min(max(soc, battery.soc_min_kwh), battery.soc_max_kwh)
            last_state = EnvState(
                t=state.t + 1, soc_kwh=soc, done=state.t + 1 >= scenario.horizon
            )
    log.final_state = last_state
    return log
