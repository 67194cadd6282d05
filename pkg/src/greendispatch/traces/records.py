"""Trace record types and CSV ingestion.

The trace CSV schema is fixed: header exactly
``timestamp,solar_kw,wind_kw,demand_kw,grid_price_per_kwh``, UTF-8,
RFC-4180 quoting. Timestamps are ISO-8601, treated as UTC.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Optional

CSV_COLUMNS = ("timestamp", "solar_kw", "wind_kw", "demand_kw", "grid_price_per_kwh")

NUMERIC_FIELDS = ("solar_kw", "wind_kw", "demand_kw", "grid_price_per_kwh")


@dataclass(frozen=True)
class RawRecord:
    """One raw trace sample; numeric fields are None when missing."""

    timestamp: datetime
    solar_kw: Optional[float]
    wind_kw: Optional[float]
    demand_kw: Optional[float]
    grid_price_per_kwh: Optional[float]
    soc_kwh: Optional[float] = None
    quality_flags: tuple[str, ...] = ()

    def with_flag(self, flag: str) -> "RawRecord":
        return replace(self, quality_flags=self.quality_flags + (flag,))


@dataclass(frozen=True)
class FeatureRange:
    """Observed [lo, hi] of one feature; hi >= lo."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.hi < self.lo:
            raise ValueError(f"degenerate range: hi {self.hi} < lo {self.lo}")


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature min/max used by min-max normalization."""

    ranges: dict[str, FeatureRange]

    @classmethod
    def from_columns(cls, columns: dict[str, list[float]]) -> "NormalizationStats":
        return cls(
            ranges={
                name: FeatureRange(min(values), max(values))
                for name, values in columns.items()
            }
        )

    def __getitem__(self, name: str) -> FeatureRange:
        return self.ranges[name]


@dataclass(frozen=True)
class UnifiedRecord:
    """One merged, normalized preprocessing output row."""

    step: int
    features: dict[str, float]  # normalized to [0, 1]
    time_sin: float
    time_cos: float
    raw: dict[str, float] = field(default_factory=dict)


def _parse_float(text: str, line_no: int, column: str) -> Optional[float]:
    text = text.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        raise ValueError(
            f"line {line_no}: non-numeric value {text!r} in column {column!r}"
        ) from None
    if math.isnan(value):
        return None
    return value


def load_csv(path: str | Path) -> list[RawRecord]:
    """Load trace records; raises with the offending line number on bad rows."""
    path = Path(path)
    records: list[RawRecord] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected header row") from None
        for col in CSV_COLUMNS:
            if col not in header:
                raise ValueError(f"{path}: missing required column {col!r}")
        for col in header:
            if col not in CSV_COLUMNS:
                raise ValueError(f"{path}: unknown column {col!r}")
        idx = {col: header.index(col) for col in CSV_COLUMNS}
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(
                    f"line {line_no}: expected {len(header)} fields, got {len(row)}"
                )
            ts_text = row[idx["timestamp"]].strip()
            try:
                ts = datetime.fromisoformat(ts_text)
            except ValueError:
                raise ValueError(
                    f"line {line_no}: unparseable timestamp {ts_text!r}"
                ) from None
            records.append(
                RawRecord(
                    timestamp=ts,
                    solar_kw=_parse_float(row[idx["solar_kw"]], line_no, "solar_kw"),
                    wind_kw=_parse_float(row[idx["wind_kw"]], line_no, "wind_kw"),
                    demand_kw=_parse_float(row[idx["demand_kw"]], line_no, "demand_kw"),
                    grid_price_per_kwh=_parse_float(
                        row[idx["grid_price_per_kwh"]], line_no, "grid_price_per_kwh"
                    ),
                )
            )
    return records


def _format_value(value: Optional[float]) -> str:
    return "" if value is None else repr(value)


def save_csv(records: list[RawRecord], path: str | Path) -> None:
    """Write records in the fixed schema; load_csv(save_csv(r)) == r."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(
                [
                    rec.timestamp.isoformat(),
                    _format_value(rec.solar_kw),
                    _format_value(rec.wind_kw),
                    _format_value(rec.demand_kw),
                    _format_value(rec.grid_price_per_kwh),
                ]
            )
