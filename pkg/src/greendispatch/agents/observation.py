"""Observation windows fed to the controller.

Each row of the W x F window holds one timestep's normalized features:
demand, solar, wind, SOC fraction (current SOC, broadcast), grid price,
cyclic hour-of-day encodings, and the renewable forecast for the next H
steps made at that row's time. Rows before the episode start are zero.
"""

from __future__ import annotations

import numpy as np

from .. import forecast as fc
from ..sim.types import EnvState, Scenario
from ..traces.pipeline import encode_hour
from ..traces.records import FeatureRange

DEFAULT_WINDOW = 8
DEFAULT_FORECAST_HORIZON = 4

BASE_FEATURES = 7  # demand, solar, wind, soc, price, sin, cos


def feature_count(horizon: int = DEFAULT_FORECAST_HORIZON) -> int:
    return BASE_FEATURES + horizon


def _norm(x: float, rng: FeatureRange) -> float:
    if rng.hi == rng.lo:
        return 0.0
    return min(max((x - rng.lo) / (rng.hi - rng.lo), 0.0), 1.0)


class ObservationBuilder:
    """Incrementally builds observation windows for one scenario.

    Static per-step rows are cached; the SOC column is filled from the
    current state at build time. Safe to reuse across episodes of the
    same scenario.
    """

    def __init__(
        self,
        scenario: Scenario,
        forecaster: fc.ForecastModel | None = None,
        zero_forecast: bool = False,
        window: int = DEFAULT_WINDOW,
        horizon: int = DEFAULT_FORECAST_HORIZON,
    ):
        self.scenario = scenario
        self.forecaster = forecaster
        self.zero_forecast = zero_forecast or forecaster is None
        self.window = window
        self.horizon = horizon
        series = scenario.series
        self.renew = [series.renewable_kw(t) for t in range(len(series))]
        self.stats = {
            "demand": FeatureRange(min(series.demand_kw), max(series.demand_kw)),
            "solar": FeatureRange(min(series.solar_kw), max(series.solar_kw)),
            "wind": FeatureRange(min(series.wind_kw), max(series.wind_kw)),
            "price": FeatureRange(
                min(series.grid_price_per_kwh), max(series.grid_price_per_kwh)
            ),
            "renew": FeatureRange(min(self.renew), max(self.renew)),
        }
        self._rows: list[np.ndarray] = []  # static row parts, SOC column zeroed

    @property
    def features(self) -> int:
        return feature_count(self.horizon)

    def _static_row(self, t: int) -> np.ndarray:
        series = self.scenario.series
        row = np.zeros(self.features)
        row[0] = _norm(series.demand_kw[t], self.stats["demand"])
        row[1] = _norm(series.solar_kw[t], self.stats["solar"])
        row[2] = _norm(series.wind_kw[t], self.stats["wind"])
        # row[3] is the SOC fraction, filled at build time
        row[4] = _norm(series.grid_price_per_kwh[t], self.stats["price"])
        hour = (t * series.timestep_hours) % 24.0
        row[5], row[6] = encode_hour(hour)
        if not self.zero_forecast and self.horizon > 0:
            model = self.forecaster
            if t + 1 >= model.required_history:
                preds = fc.predict(model, self.renew[: t + 1], self.horizon)
                for i, value in enumerate(preds):
                    row[BASE_FEATURES + i] = _norm(value, self.stats["renew"])
        return row

    def build(self, state: EnvState) -> np.ndarray:
        t = state.t
        while len(self._rows) <= t:
            self._rows.append(self._static_row(len(self._rows)))
        battery = self.scenario.battery
        soc_frac = (state.soc_kwh - battery.soc_min_kwh) / battery.usable_kwh
        soc_frac = min(max(soc_frac, 0.0), 1.0)
        obs = np.zeros((self.window, self.features))
        for i in range(self.window):
            u = t - self.window + 1 + i
            if u < 0:
                continue
            obs[i] = self._rows[u]
            obs[i, 3] = soc_frac
        return obs


def build_observation(
    state: EnvState,
    scenario: Scenario,
    forecaster: fc.ForecastModel | None = None,
    zero_forecast: bool = False,
    window: int = DEFAULT_WINDOW,
    horizon: int = DEFAULT_FORECAST_HORIZON,
) -> np.ndarray:
    """One-shot observation construction (tests and one-off callers)."""
    builder = ObservationBuilder(
        scenario, forecaster, zero_forecast=zero_forecast, window=window, horizon=horizon
    )
    return builder.build(state)
