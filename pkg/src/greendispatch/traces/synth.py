"""Synthetic scenario generator.

Produces schema-compatible exogenous series: a diurnal solar bell scaled
by slow cloud factors, autoregressive wind, a diurnal data-center demand
profile with noise, a time-of-use tariff, and a grid capacity series with
sporadic constraint windows during the morning peak. Presets scale the
renewable fleet so the mean renewable/demand ratio hits the preset target.
"""

from __future__ import annotations

import math

import numpy as np

from ..sim.types import ExogenousSeries

PRESETS = {
    # target renewable/demand ratio, solar share of renewables, solar bell exponent
    "high": (1.3, 0.75, 1.6),
    "low": (0.5, 0.80, 2.2),
    "mixed": (0.9, 0.60, 1.6),
}

BASE_LOAD_KW = 80.0
ACTIVITY_PEAK_KW = 45.0
STORAGE_PRICE = 0.10
EMISSION_FACTOR = 0.4
GRID_CAP_FACTOR = 1.2

# Time-of-use tariff: (start hour, end hour, price per kWh). The morning
# block is the system peak: pre-solar demand ramp on a stressed grid.
TOU_TARIFF = (
    (0.0, 6.0, 0.08),
    (6.0, 10.0, 0.65),
    (10.0, 16.0, 0.20),
    (16.0, 20.0, 0.28),
    (20.0, 24.0, 0.08),
)

DIP_PROBABILITY = 0.5  # chance of a grid constraint window per day
DIP_CAP_FRACTION = 0.6  # capacity during a window, as a fraction of mean demand


def _tou_price(hour: float) -> float:
    for start, end, price in TOU_TARIFF:
        if start <= hour < end:
            return price
    return TOU_TARIFF[-1][2]


def _activity(hour: float) -> float:
    """Business-hours activity shape in [0, 1]: ramps up 6-9, down 18-22."""
    if hour < 6.0 or hour >= 22.0:
        return 0.0
    if hour < 9.0:
        return (hour - 6.0) / 3.0
    if hour < 18.0:
        return 1.0
    return (22.0 - hour) / 4.0


def _clear_sky(hour: float, exponent: float) -> float:
    if not 6.0 < hour < 18.0:
        return 0.0
    return math.sin(math.pi * (hour - 6.0) / 12.0) ** exponent


def synthesize(
    preset: str, days: int, seed: int, dt_hours: float = 0.25
) -> ExogenousSeries:
    """Generate a deterministic exogenous series for the given preset."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}, expected one of {sorted(PRESETS)}")
    if days < 1:
        raise ValueError("days must be >= 1")
    ratio, solar_share, bell_exp = PRESETS[preset]
    rng = np.random.default_rng(seed)
    steps_per_day = int(round(24.0 / dt_hours))
    n = days * steps_per_day
    hours = (np.arange(n) * dt_hours) % 24.0
    day_index = (np.arange(n) * dt_hours) // 24.0

    # Demand: base + activity bump + smooth AR noise.
    activity = np.array([_activity(h) for h in hours])
    noise = np.empty(n)
    z = 0.0
    eps = rng.normal(0.0, 3.0, size=n)
    for i in range(n):
        z = 0.85 * z + eps[i]
        noise[i] = z
    demand = np.maximum(BASE_LOAD_KW + ACTIVITY_PEAK_KW * activity + noise, 20.0)

    # Solar: clear-sky bell scaled by slow per-day cloudiness and
    # faster intra-day attenuation.
    clear = np.array([_clear_sky(h, bell_exp) for h in hours])
    cloud_daily = np.empty(days)
    c = 0.75
    for d in range(days):
        c = 0.55 * c + 0.45 * rng.uniform(0.35, 1.0)
        cloud_daily[d] = c
    intra = np.empty(n)
    f = 0.9
    draws = rng.uniform(0.6, 1.05, size=n)
    for i in range(n):
        f = 0.95 * f + 0.05 * draws[i]
        intra[i] = f
    solar_raw = clear * cloud_daily[day_index.astype(int)] * intra

    # Wind: mean-reverting AR(1), clipped to a plausible band.
    wind_raw = np.empty(n)
    w = 0.45
    gusts = rng.normal(0.0, 0.05, size=n)
    for i in range(n):
        w = 0.97 * w + 0.03 * 0.45 + gusts[i]
        w = min(max(w, 0.0), 1.3)
        wind_raw[i] = w

    # Scale the fleet so mean(renewables)/mean(demand) hits the target ratio.
    mean_demand = float(np.mean(demand))
    target_renew = ratio * mean_demand
    solar_scale = solar_share * target_renew / float(np.mean(solar_raw))
    wind_scale = (1.0 - solar_share) * target_renew / float(np.mean(wind_raw))
    solar = solar_raw * solar_scale
    wind = wind_raw * wind_scale

    # Tariff with slight smoothed noise.
    price_noise = np.empty(n)
    p = 0.0
    pdraws = rng.normal(0.0, 0.004, size=n)
    for i in range(n):
        p = 0.9 * p + pdraws[i]
        price_noise[i] = p
    price = np.maximum(
        np.array([_tou_price(h) for h in hours]) + price_noise, 0.01
    )

    # Grid capacity: ample except during sporadic morning constraint windows.
    cap = np.full(n, GRID_CAP_FACTOR * float(np.max(demand)))
    dip_cap = DIP_CAP_FRACTION * mean_demand
    for d in range(days):
        has_dip = rng.random() < DIP_PROBABILITY
        start_step = int(rng.integers(int(6.5 / dt_hours), int(9.0 / dt_hours) + 1))
        duration = int(rng.integers(2, 5))
        if has_dip:
            lo = d * steps_per_day + start_step
            cap[lo : lo + duration] = dip_cap

    return ExogenousSeries(
        timestep_hours=dt_hours,
        demand_kw=tuple(float(v) for v in demand),
        solar_kw=tuple(float(v) for v in solar),
        wind_kw=tuple(float(v) for v in wind),
        grid_price_per_kwh=tuple(float(v) for v in price),
        storage_price_per_kwh=STORAGE_PRICE,
        grid_cap_kw=tuple(float(v) for v in cap),
        emission_factor_kg_per_kwh=EMISSION_FACTOR,
    )
