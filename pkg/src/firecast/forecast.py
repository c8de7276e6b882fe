"""Recursive multi-step forecasting.

Step 1 predicts from the last `window` observed values; every later
step slides the window forward over observed-plus-predicted values.
The recursion runs in normalized space and inverse-transforms once at
the end.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dataset import MonthlySeries, add_months, format_month
from .errors import DataError, NumericError
from .network import forward_window
from .training import Checkpoint


@dataclass
class ForecastResult:
    start_month: tuple[int, int]
    horizon: int
    values: np.ndarray
    clamped: bool

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.horizon,):
            raise DataError(f"forecast must hold exactly {self.horizon} values")

    def months(self) -> list[str]:
        return [format_month(add_months(self.start_month, i))
                for i in range(self.horizon)]


def recursive_forecast(predict, seed_window, horizon: int) -> np.ndarray:
    """Run the sliding-window recursion with an arbitrary one-step predictor.

    predict takes a 1-D window array and returns the next value; the
    window for step k holds the most recent len(seed_window) entries of
    seed ++ predictions[1..k-1].
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    window = np.asarray(seed_window, dtype=np.float64).copy()
    if window.ndim != 1 or window.size < 1:
        raise DataError("seed window must be a non-empty 1-D sequence")
    out = np.empty(horizon, dtype=np.float64)
    for k in range(horizon):
        value = float(predict(window))
        if not np.isfinite(value):
            raise NumericError(f"forecast step {k + 1} produced a non-finite value")
        out[k] = value
        window = np.concatenate([window[1:], [value]])
    return out


def forecast(ckpt: Checkpoint, series: MonthlySeries, horizon: int = 12,
             clamp: bool = True) -> ForecastResult:
    window = ckpt.config.window
    if len(series) < window:
        raise DataError(f"series of {len(series)} months cannot seed a "
                        f"{window}-month window")
    seed = ckpt.norm.apply(series.values)[-window:]
    normalized = recursive_forecast(
        lambda w: forward_window(ckpt.model, w)[0], seed, horizon)
    values = ckpt.norm.invert(normalized)
    if clamp:
        values = np.maximum(values, 0.0)
    return ForecastResult(start_month=series.month_at(len(series)),
                          horizon=horizon, values=values, clamped=clamp)


def write_forecast_csv(result: ForecastResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["month", "predicted_count"])
        for month, value in zip(result.months(), result.values):
            writer.writerow([month, repr(float(value))])
