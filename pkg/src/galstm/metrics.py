"""Regression metrics over aligned actual/predicted vectors.

MAPE is undefined (None) when any actual is zero, and R^2 is undefined
when the actuals are constant; both are reported, never raised, and
never clamped (R^2 may be negative).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ShapeError


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    mse: float
    rmse: float
    r2: float | None  # None: constant actuals
    mape: float | None  # percent; None: some actual is zero
    scale: str = "price"  # "price" or "scaled", bookkeeping for reports

    def as_dict(self) -> dict:
        return {
            "mae": self.mae,
            "mse": self.mse,
            "rmse": self.rmse,
            "r2": self.r2,
            "mape": self.mape,
            "scale": self.scale,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"


def compute_metrics(actual, predicted, scale: str = "price") -> MetricsReport:
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if actual.shape != predicted.shape or actual.ndim != 1:
        raise ShapeError(f"actual {actual.shape} and predicted {predicted.shape} must be equal-length vectors")
    if actual.size == 0:
        raise ShapeError("metrics need at least one point")
    if not (np.all(np.isfinite(actual)) and np.all(np.isfinite(predicted))):
        raise NumericError("metrics inputs must be finite")

    err = actual - predicted
    mae = float(np.mean(np.abs(err)))
    mse = float(np.mean(err * err))
    rmse = float(np.sqrt(mse))

    ss_res = float(np.sum(err * err))
    ss_tot = float(np.sum((actual - np.mean(actual)) ** 2))
    r2 = None if ss_tot == 0.0 else 1.0 - ss_res / ss_tot

    mape = None
    if np.all(actual != 0.0):
        mape = float(np.mean(np.abs(err) / np.abs(actual)) * 100.0)

    return MetricsReport(mae=mae, mse=mse, rmse=rmse, r2=r2, mape=mape, scale=scale)


def format_table(report: MetricsReport) -> str:
    """Two-column 'Evaluation parameters / Value' table."""
    rows = [
        ("MAE", repr(report.mae)),
        ("MSE", repr(report.mse)),
        ("RMSE", repr(report.rmse)),
        ("R2", "undefined (constant actuals)" if report.r2 is None else repr(report.r2)),
        ("MAPE", "undefined (zero actual)" if report.mape is None else repr(report.mape)),
    ]
    left = max(len("Evaluation parameters"), *(len(r[0]) for r in rows))
    lines = [f"{'Evaluation parameters':<{left}}  Value"]
    lines.extend(f"{name:<{left}}  {value}" for name, value in rows)
    return "\n".join(lines)
