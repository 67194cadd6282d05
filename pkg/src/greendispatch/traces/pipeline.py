"""Preprocessing pipeline: clean, normalize, encode, aggregate, integrate.

All stages are pure transformations over record lists.
"""

from __future__ import annotations

import math
from datetime import datetime, timedelta
from typing import Iterable, Mapping, Sequence

from .records import (
    NUMERIC_FIELDS,
    FeatureRange,
    NormalizationStats,
    RawRecord,
    UnifiedRecord,
)

WINSOR_SIGMAS = 5.0


def _is_bad(value: float | None) -> bool:
    return value is None or math.isnan(value) or value < 0


def clean(records: Sequence[RawRecord]) -> list[RawRecord]:
    """Drop unusable records, order and deduplicate them, winsorize outliers.

    A record is dropped when any power or price field is missing, NaN or
    negative. Duplicated timestamps keep the first occurrence. Values
    beyond mu +/- 5 sigma (population stats over the kept records, one
    pass) are clamped to that bound and flagged.
    """
    kept = [
        r
        for r in records
        if not any(_is_bad(getattr(r, name)) for name in NUMERIC_FIELDS)
    ]
    kept.sort(key=lambda r: r.timestamp)
    deduped: list[RawRecord] = []
    seen: set[datetime] = set()
    for rec in kept:
        if rec.timestamp in seen:
            continue
        seen.add(rec.timestamp)
        deduped.append(rec)
    if not deduped:
        raise ValueError("no usable records after cleaning")

    bounds: dict[str, tuple[float, float]] = {}
    n = len(deduped)
    for name in NUMERIC_FIELDS:
        values = [getattr(r, name) for r in deduped]
        mean = sum(values) / n
        var = sum((v - mean) ** 2 for v in values) / n
        sigma = math.sqrt(var)
        bounds[name] = (mean - WINSOR_SIGMAS * sigma, mean + WINSOR_SIGMAS * sigma)

    out: list[RawRecord] = []
    for rec in deduped:
        updates: dict[str, float] = {}
        for name in NUMERIC_FIELDS:
            value = getattr(rec, name)
            lo, hi = bounds[name]
            if value < lo:
                updates[name] = lo
            elif value > hi:
                updates[name] = hi
        if updates:
            rec = RawRecord(
                timestamp=rec.timestamp,
                solar_kw=updates.get("solar_kw", rec.solar_kw),
                wind_kw=updates.get("wind_kw", rec.wind_kw),
                demand_kw=updates.get("demand_kw", rec.demand_kw),
                grid_price_per_kwh=updates.get(
                    "grid_price_per_kwh", rec.grid_price_per_kwh
                ),
                soc_kwh=rec.soc_kwh,
                quality_flags=rec.quality_flags
                + tuple(f"winsorized:{k}" for k in sorted(updates)),
            )
        out.append(rec)
    return out


def minmax_normalize(x: float, stats: FeatureRange) -> float:
    """Min-max normalization; a degenerate range (hi == lo) maps to 0."""
    if stats.hi == stats.lo:
        return 0.0
    return (x - stats.lo) / (stats.hi - stats.lo)


def denormalize(y: float, stats: FeatureRange) -> float:
    return stats.lo + y * (stats.hi - stats.lo)


def encode_hour(hour: float) -> tuple[float, float]:
    """Cyclic (sin, cos) encoding of an hour-of-day value in [0, 24)."""
    angle = 2.0 * math.pi * (hour / 24.0)
    return math.sin(angle), math.cos(angle)


def encode_time(timestamp: datetime) -> tuple[float, float]:
    """Cyclic hour-of-day encoding of a timestamp."""
    hour = timestamp.hour + timestamp.minute / 60.0 + timestamp.second / 3600.0
    return encode_hour(hour)


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def aggregate(records: Sequence[RawRecord], dt_hours: float) -> list[RawRecord]:
    """Resample sorted records to uniform spacing by per-interval mean.

    Interval k covers [first + k*dt, first + (k+1)*dt); samples landing
    exactly on the final boundary join the last interval. Intervals with
    no samples carry the previous interval's values forward.
    """
    if not records:
        raise ValueError("aggregate requires at least one record")
    if dt_hours <= 0:
        raise ValueError("dt_hours must be > 0")
    first = records[0].timestamp
    span_hours = (records[-1].timestamp - first).total_seconds() / 3600.0
    n_intervals = max(1, math.ceil(span_hours / dt_hours))

    buckets: list[dict[str, list[float]]] = [
        {name: [] for name in NUMERIC_FIELDS + ("soc_kwh",)} for _ in range(n_intervals)
    ]
    for rec in records:
        offset = (rec.timestamp - first).total_seconds() / 3600.0
        k = min(int(offset // dt_hours), n_intervals - 1)
        for name in NUMERIC_FIELDS + ("soc_kwh",):
            value = getattr(rec, name)
            if value is not None:
                buckets[k][name].append(value)

    out: list[RawRecord] = []
    prev: dict[str, float | None] = {name: None for name in NUMERIC_FIELDS + ("soc_kwh",)}
    for k in range(n_intervals):
        values: dict[str, float | None] = {}
        for name in NUMERIC_FIELDS + ("soc_kwh",):
            samples = buckets[k][name]
            values[name] = _mean(samples) if samples else prev[name]
        prev = values
        out.append(
            RawRecord(
                timestamp=first + timedelta(hours=k * dt_hours),
                solar_kw=values["solar_kw"],
                wind_kw=values["wind_kw"],
                demand_kw=values["demand_kw"],
                grid_price_per_kwh=values["grid_price_per_kwh"],
                soc_kwh=values["soc_kwh"],
            )
        )
    return out


def integrate(
    streams: Mapping[str, Iterable[tuple[int, float]]],
    dt_hours: float,
    start: datetime,
) -> tuple[list[UnifiedRecord], NormalizationStats]:
    """Merge per-feature streams keyed by step index into unified records.

    Inner join: only steps present in every stream survive. Normalization
    stats are computed from the joined data and applied to every feature.
    """
    if not streams:
        raise ValueError("integrate requires at least one stream")
    tables = {name: dict(pairs) for name, pairs in streams.items()}
    common = set.intersection(*(set(tbl) for tbl in tables.values()))
    if not common:
        raise ValueError("streams share no step indices")
    steps = sorted(common)

    columns = {name: [tbl[s] for s in steps] for name, tbl in tables.items()}
    stats = NormalizationStats.from_columns(columns)

    out: list[UnifiedRecord] = []
    for i, s in enumerate(steps):
        ts = start + timedelta(hours=s * dt_hours)
        sin_v, cos_v = encode_time(ts)
        raw = {name: columns[name][i] for name in tables}
        features = {
            name: minmax_normalize(raw[name], stats[name]) for name in tables
        }
        out.append(
            UnifiedRecord(step=s, features=features, time_sin=sin_v, time_cos=cos_v, raw=raw)
        )
    return out, stats


def unify_records(
    records: Sequence[RawRecord], dt_hours: float
) -> tuple[list[UnifiedRecord], NormalizationStats]:
    """Convenience wrapper: feed aggregated records through integrate."""
    agg = aggregate(records, dt_hours)
    streams = {
        name: [(k, getattr(rec, name)) for k, rec in enumerate(agg)]
        for name in NUMERIC_FIELDS
    }
    return integrate(streams, dt_hours, agg[0].timestamp)
