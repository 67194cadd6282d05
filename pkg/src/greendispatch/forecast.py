"""Short-horizon renewable availability predictors.

Three model kinds: persistence (repeat last value), seasonal-naive (repeat
the value one day earlier) and autoregressive (least-squares AR(p) rolled
forward recursively). Forecasts are clamped nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

KINDS = ("persistence", "seasonal-naive", "ar")

DEFAULT_AR_ORDER = 4


@dataclass(frozen=True)
class ForecastModel:
    kind: str
    order: int = 0  # AR order p; also the minimum history length
    bias: float = 0.0
    coefficients: tuple[float, ...] = ()  # most recent lag first
    steps_per_day: int = 96
    fallback: bool = False  # AR fit degenerated and fell back to persistence

    @property
    def required_history(self) -> int:
        if self.kind == "seasonal-naive":
            return self.steps_per_day
        return max(self.order, 1)


def fit(
    kind: str,
    series: Sequence[float],
    order: int = DEFAULT_AR_ORDER,
    steps_per_day: int = 96,
) -> ForecastModel:
    """Fit a forecaster to a renewable power series.

    AR coefficients solve the least-squares normal equations on lagged
    values (minimum-norm solution when rank deficient); a singular or
    non-finite fit falls back to persistence with the fallback flag set.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown forecaster kind {kind!r}")
    if kind == "persistence":
        if len(series) < 1:
            raise ValueError("persistence needs at least one observation")
        return ForecastModel(kind="persistence")
    if kind == "seasonal-naive":
        if len(series) <= steps_per_day:
            raise ValueError("seasonal-naive needs more than one day of history")
        return ForecastModel(kind="seasonal-naive", steps_per_day=steps_per_day)

    if order < 1:
        raise ValueError("AR order must be >= 1")
    x = np.asarray(series, dtype=float)
    if len(x) <= order:
        raise ValueError(f"AR({order}) needs more than {order} observations")
    rows = len(x) - order
    design = np.empty((rows, order + 1))
    design[:, 0] = 1.0
    for lag in range(1, order + 1):
        design[:, lag] = x[order - lag : order - lag + rows]
    target = x[order:]
    solution, *_ = np.linalg.lstsq(design, target, rcond=None)
    if not np.all(np.isfinite(solution)):
        return ForecastModel(kind="persistence", fallback=True)
    return ForecastModel(
        kind="ar",
        order=order,
        bias=float(solution[0]),
        coefficients=tuple(float(c) for c in solution[1:]),
        steps_per_day=steps_per_day,
    )


def predict(model: ForecastModel, history: Sequence[float], horizon: int) -> list[float]:
    """Forecast the next ``horizon`` values given trailing history."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if len(history) < model.required_history:
        raise ValueError(
            f"history of length {len(history)} shorter than required {model.required_history}"
        )
    if model.kind == "persistence" or model.fallback:
        return [max(float(history[-1]), 0.0)] * horizon
    if model.kind == "seasonal-naive":
        period = model.steps_per_day
        out = []
        buf = list(history)
        for _ in range(horizon):
            value = max(float(buf[-period]), 0.0)
            out.append(value)
            buf.append(value)
        return out
    buf = [float(v) for v in history]
    out = []
    for _ in range(horizon):
        value = model.bias
        for lag, coef in enumerate(model.coefficients, start=1):
            value += coef * buf[-lag]
        value = max(value, 0.0)
        out.append(value)
        buf.append(value)
    return out


def evaluate_mae(model: ForecastModel, series: Sequence[float]) -> float:
    """Mean absolute error of rolling one-step-ahead forecasts."""
    start = model.required_history
    if len(series) <= start:
        raise ValueError("held-out series shorter than the model's required history")
    errors = []
    for t in range(start, len(series)):
        pred = predict(model, series[:t], 1)[0]
        errors.append(abs(pred - float(series[t])))
    return sum(errors) / len(errors)
