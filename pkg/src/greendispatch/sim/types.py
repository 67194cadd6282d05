"""Core domain types for the dispatch simulation.

Units convention: power in kW, energy in kWh, prices in currency per kWh,
emissions in kg CO2, time step duration in hours.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

DEFAULT_DT_HOURS = 0.25
DEFAULT_EMISSION_FACTOR = 0.4  # kg CO2 per kWh of grid energy
DEFAULT_ACTION_LEVELS = 11
DEFAULT_GRID_CAP_FACTOR = 1.2  # grid capacity as a multiple of peak demand


def _check_nonnegative(name: str, values: Sequence[float]) -> None:
    for v in values:
        if v < 0:
            raise ValueError(f"{name} must be nonnegative, got {v}")


@dataclass(frozen=True)
class ExogenousSeries:
    """Time-indexed signals driving one simulation scenario.

    All per-step sequences have equal length (the horizon). The storage
    price may be a scalar (applied to every step) or a full sequence.
    """

    timestep_hours: float
    demand_kw: tuple[float, ...]
    solar_kw: tuple[float, ...]
    wind_kw: tuple[float, ...]
    grid_price_per_kwh: tuple[float, ...]
    storage_price_per_kwh: float | tuple[float, ...]
    grid_cap_kw: tuple[float, ...]
    emission_factor_kg_per_kwh: float = DEFAULT_EMISSION_FACTOR

    def __post_init__(self) -> None:
        if self.timestep_hours <= 0:
            raise ValueError("timestep_hours must be > 0")
        n = len(self.demand_kw)
        if n < 1:
            raise ValueError("series must have length >= 1")
        for name in ("solar_kw", "wind_kw", "grid_price_per_kwh", "grid_cap_kw"):
            seq = getattr(self, name)
            if len(seq) != n:
                raise ValueError(f"{name} has length {len(seq)}, expected {n}")
            _check_nonnegative(name, seq)
        _check_nonnegative("demand_kw", self.demand_kw)
        storage = self.storage_price_per_kwh
        if isinstance(storage, tuple):
            if len(storage) != n:
                raise ValueError("storage_price_per_kwh sequence length mismatch")
            _check_nonnegative("storage_price_per_kwh", storage)
        elif storage < 0:
            raise ValueError("storage_price_per_kwh must be nonnegative")
        if self.emission_factor_kg_per_kwh < 0:
            raise ValueError("emission_factor_kg_per_kwh must be nonnegative")

    def __len__(self) -> int:
        return len(self.demand_kw)

    def storage_price_at(self, t: int) -> float:
        storage = self.storage_price_per_kwh
        return storage[t] if isinstance(storage, tuple) else storage

    def renewable_kw(self, t: int) -> float:
        return self.solar_kw[t] + self.wind_kw[t]


@dataclass(frozen=True)
class LoadModel:
    """Demand composition: constant base load plus activity plus cooling.

    When ``activity_is_utilization`` is set the activity sequence is a
    unitless utilization factor multiplying the base load; otherwise it is
    an additive kW series.
    """

    base_load_kw: float
    activity_load: tuple[float, ...]
    cooling_overhead_kw: tuple[float, ...]
    activity_is_utilization: bool = False

    def __post_init__(self) -> None:
        if self.base_load_kw < 0:
            raise ValueError("base_load_kw must be nonnegative")
        if len(self.activity_load) != len(self.cooling_overhead_kw):
            raise ValueError("activity and cooling sequences must align")
        _check_nonnegative("activity_load", self.activity_load)
        _check_nonnegative("cooling_overhead_kw", self.cooling_overhead_kw)

    def __len__(self) -> int:
        return len(self.activity_load)


def demand_at(load: LoadModel, t: int) -> float:
    """Power demand (kW) of the load model at step ``t``.

    Utilization mode multiplies the base load by the activity factor;
    additive mode sums base and activity directly.
    """
    if not 0 <= t < len(load):
        raise IndexError(f"step {t} outside load series of length {len(load)}")
    if load.activity_is_utilization:
        return load.base_load_kw * load.activity_load[t] + load.cooling_overhead_kw[t]
    return load.base_load_kw + load.activity_load[t] + load.cooling_overhead_kw[t]


def renewable_at(series: ExogenousSeries, t: int) -> float:
    """Total renewable power (kW) available at step ``t``."""
    if not 0 <= t < len(series):
        raise IndexError(f"step {t} outside series of length {len(series)}")
    return series.solar_kw[t] + series.wind_kw[t]


@dataclass(frozen=True)
class BatterySpec:
    """Battery energy storage parameters and limits."""

    soc_min_kwh: float
    soc_max_kwh: float
    charge_eff: float
    discharge_eff: float
    max_charge_kw: float
    max_discharge_kw: float
    initial_soc_kwh: float

    def __post_init__(self) -> None:
        if not 0 <= self.soc_min_kwh < self.soc_max_kwh:
            raise ValueError("require 0 <= soc_min_kwh < soc_max_kwh")
        if not self.soc_min_kwh <= self.initial_soc_kwh <= self.soc_max_kwh:
            raise ValueError("initial_soc_kwh outside [soc_min_kwh, soc_max_kwh]")
        if not 0 < self.charge_eff <= 1 or not 0 < self.discharge_eff <= 1:
            raise ValueError("efficiencies must lie in (0, 1]")
        if self.max_charge_kw <= 0 or self.max_discharge_kw <= 0:
            raise ValueError("power ratings must be > 0")

    @property
    def usable_kwh(self) -> float:
        return self.soc_max_kwh - self.soc_min_kwh


@dataclass(frozen=True)
class RewardWeights:
    """Weights of the cost, emissions and unserved-energy reward terms."""

    alpha: float = 1.0
    beta: float = 0.5
    sla_penalty: float = 10.0  # per unserved kWh; 0 recovers the bare objective

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0 or self.sla_penalty < 0:
            raise ValueError("reward weights must be nonnegative")


UNTUNED_WEIGHTS = RewardWeights(alpha=1.0, beta=1.0, sla_penalty=0.0)


@dataclass(frozen=True)
class EnvState:
    t: int
    soc_kwh: float
    done: bool = False


@dataclass(frozen=True)
class Action:
    """Discrete signed battery setpoint.

    Index ``floor(K/2)`` is exactly 0 kW; lower indices request discharge
    levels down to -max_discharge_kw, higher indices request charge levels
    up to +max_charge_kw, equally spaced on each side.
    """

    battery_setpoint_index: int


def idle_index(levels: int) -> int:
    return levels // 2


def setpoint_kw(action: Action, levels: int, battery: BatterySpec) -> float:
    """Signed battery power (kW) requested by the action; +charge, -discharge."""
    k = action.battery_setpoint_index
    if not 0 <= k < levels:
        raise ValueError(f"setpoint index {k} outside [0, {levels - 1}]")
    mid = idle_index(levels)
    if k == mid:
        return 0.0
    if k < mid:
        return -battery.max_discharge_kw * (mid - k) / mid
    return battery.max_charge_kw * (k - mid) / (levels - 1 - mid)


@dataclass(frozen=True)
class StepOutcome:
    """Full energy and cost accounting of one dispatch step (energies in kWh)."""

    renewable_used_kwh: float
    curtailed_kwh: float
    charge_kwh: float
    discharge_kwh: float
    grid_kwh: float
    unserved_kwh: float
    energy_cost: float
    emissions_kg: float
    sla_violated: bool
    reward: float


@dataclass(frozen=True)
class Scenario:
    """A complete simulation instance: signals, battery, reward and action space."""

    series: ExogenousSeries
    battery: BatterySpec
    weights: RewardWeights = field(default_factory=RewardWeights)
    label: str = "scenario"
    action_levels: int = DEFAULT_ACTION_LEVELS
    allow_grid_charging: bool = False

    def __post_init__(self) -> None:
        if self.action_levels < 2:
            raise ValueError("action_levels must be >= 2")

    @property
    def horizon(self) -> int:
        return len(self.series)

    def with_weights(self, weights: RewardWeights) -> "Scenario":
        return replace(self, weights=weights)

    def with_label(self, label: str) -> "Scenario":
        return replace(self, label=label)


@dataclass(frozen=True)
class LogStep:
    """One logged step: the state the action was taken in, plus its outcome."""

    state: EnvState
    action: Action
    outcome: StepOutcome


@dataclass
class EpisodeLog:
    """Per-step dispatch ledger of a completed (or in-progress) episode."""

    scenario: Scenario
    seed: int
    steps: list[LogStep] = field(default_factory=list)
    final_state: Optional[EnvState] = None

    @property
    def scenario_label(self) -> str:
        return self.scenario.label

    def __len__(self) -> int:
        return len(self.steps)
