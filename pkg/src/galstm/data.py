"""OHLC CSV ingestion, descriptive statistics, scaling, and windowing.

CSV schema: header ``Date,Open,High,Low,Close`` (case-insensitive), one
row per trading day, decimal point, no thousands separators. Dates parse
as either ISO ``YYYY-MM-DD`` or ``YYYY/M/D``.
"""

from __future__ import annotations

import csv
import datetime as dt
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateScaleError,
    DuplicateDateError,
    EmptySeriesError,
    InsufficientDataError,
    RowParseError,
    SchemaError,
    SplitError,
)

COLUMNS = ("open", "high", "low", "close")


class OhlcSanityWarning(UserWarning):
    """Row violates low <= min(open, close) or high >= max(open, close)."""


@dataclass(frozen=True, slots=True)
class OhlcRecord:
    date: dt.date
    open: float
    high: float
    low: float
    close: float

    def value(self, column: str) -> float:
        return getattr(self, column)


@dataclass(frozen=True)
class Series:
    """Date-ordered OHLC records with a designated forecast column."""

    records: tuple[OhlcRecord, ...]
    target_column: str = "close"

    def __post_init__(self):
        if self.target_column not in COLUMNS:
            raise ValueError(f"unknown target column {self.target_column!r}")
        if not self.records:
            raise EmptySeriesError("series has no records")
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.date <= prev.date:
                raise DuplicateDateError(
                    f"records not strictly increasing by date at {cur.date}"
                )

    def __len__(self) -> int:
        return len(self.records)

    @property
    def dates(self) -> list[dt.date]:
        return [r.date for r in self.records]

    def column(self, name: str) -> np.ndarray:
        return np.array([r.value(name) for r in self.records], dtype=np.float64)

    @property
    def target(self) -> np.ndarray:
        return self.column(self.target_column)


@dataclass(frozen=True, slots=True)
class ColumnStats:
    count: int
    mean: float
    std: float
    min: float
    q25: float
    q50: float
    q75: float
    max: float


@dataclass(frozen=True)
class SeriesStats:
    per_column: dict[str, ColumnStats]

    def __getitem__(self, column: str) -> ColumnStats:
        return self.per_column[column]


@dataclass(frozen=True, slots=True)
class ScalerParams:
    """Min-max bounds fit on training data; maps [lo, hi] -> [0, 1]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise DegenerateScaleError(f"scaler needs hi > lo, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class WindowedDataset:
    """Scaled sliding windows with one-step-ahead targets.

    Window i covers series indices [i, i+lookback) and target i is the
    scaled value at index i+lookback.
    """

    windows: np.ndarray  # (n, lookback)
    targets: np.ndarray  # (n,)
    lookback: int
    scaler: ScalerParams

    def __len__(self) -> int:
        return len(self.targets)


def parse_date(text: str) -> dt.date:
    for fmt in ("%Y-%m-%d", "%Y/%m/%d"):
        try:
            return dt.datetime.strptime(text.strip(), fmt).date()
        except ValueError:
            continue
    raise ValueError(f"unparseable date {text!r} (expected YYYY-MM-DD or YYYY/M/D)")


def load_csv(path: str | Path, column: str = "close") -> Series:
    """Parse an OHLC CSV into a date-sorted Series.

    Raises SchemaError for a bad header, RowParseError (with 1-based line
    number) for a bad cell, DuplicateDateError, or EmptySeriesError.
    OHLC sanity violations (e.g. low > close) only warn: vendor data
    contains such rows.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected a Date,Open,High,Low,Close header")
        names = [h.strip().lower() for h in header]
        expected = ["date", "open", "high", "low", "close"]
        if names != expected:
            missing = [e for e in expected if e not in names]
            detail = f"missing column(s) {missing}" if missing else f"got {header}"
            raise SchemaError(f"{path}: header must be Date,Open,High,Low,Close ({detail})")

        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 5:
                raise RowParseError(lineno, f"expected 5 fields, got {len(row)}")
            try:
                date = parse_date(row[0])
            except ValueError as exc:
                raise RowParseError(lineno, str(exc)) from None
            prices = []
            for name, cell in zip(expected[1:], row[1:]):
                try:
                    value = float(cell)
                except ValueError:
                    raise RowParseError(lineno, f"unparseable {name} value {cell!r}") from None
                if not np.isfinite(value) or value <= 0.0:
                    raise RowParseError(lineno, f"{name} must be a finite positive price, got {cell!r}")
                prices.append(value)
            records.append(OhlcRecord(date, *prices))

    if not records:
        raise EmptySeriesError(f"{path}: no data rows")

    records.sort(key=lambda r: r.date)
    for prev, cur in zip(records, records[1:]):
        if cur.date == prev.date:
            raise DuplicateDateError(f"{path}: duplicate date {cur.date}")

    for rec in records:
        if rec.low > min(rec.open, rec.close) or rec.high < max(rec.open, rec.close):
            warnings.warn(
                f"{path}: OHLC sanity violation on {rec.date} "
                f"(low={rec.low}, high={rec.high}, open={rec.open}, close={rec.close})",
                OhlcSanityWarning,
                stacklevel=2,
            )

    return Series(records=tuple(records), target_column=column)


def write_csv(series: Series, path: str | Path) -> None:
    """Inverse of load_csv: load_csv(write_csv(s)) == s exactly."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["Date", "Open", "High", "Low", "Close"])
        for r in series.records:
            writer.writerow([r.date.isoformat(), repr(r.open), repr(r.high), repr(r.low), repr(r.close)])


def describe(series: Series) -> SeriesStats:
    """Per-column count/mean/std/min/25%/50%/75%/max.

    Sample standard deviation (divisor n-1; reported as 0 for a single
    row) and linear-interpolation quantiles.
    """
    per_column = {}
    for name in COLUMNS:
        values = series.column(name)
        n = len(values)
        std = float(np.std(values, ddof=1)) if n > 1 else 0.0
        q25, q50, q75 = (float(q) for q in np.quantile(values, [0.25, 0.5, 0.75]))
        per_column[name] = ColumnStats(
            count=n,
            mean=float(np.mean(values)),
            std=std,
            min=float(np.min(values)),
            q25=q25,
            q50=q50,
            q75=q75,
            max=float(np.max(values)),
        )
    return SeriesStats(per_column=per_column)


def fit_scaler(train: Series, column: str | None = None) -> ScalerParams:
    """Min-max bounds of the target column, fit on TRAINING data only."""
    values = train.column(column or train.target_column)
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        raise DegenerateScaleError(f"column {column or train.target_column!r} is constant ({lo})")
    return ScalerParams(lo=lo, hi=hi)


def scale(value, scaler: ScalerParams):
    return (np.asarray(value, dtype=np.float64) - scaler.lo) / (scaler.hi - scaler.lo)


def inverse_scale(scaled, scaler: ScalerParams):
    return np.asarray(scaled, dtype=np.float64) * (scaler.hi - scaler.lo) + scaler.lo


def make_windows(series: Series, lookback: int, scaler: ScalerParams) -> WindowedDataset:
    """Scaled sliding windows over the target column."""
    if lookback < 1:
        raise InsufficientDataError(f"lookback must be >= 1, got {lookback}")
    n = len(series)
    if n <= lookback:
        raise InsufficientDataError(
            f"series has {n} rows; need more than lookback={lookback} to form any window"
        )
    scaled = scale(series.target, scaler)
    count = n - lookback
    windows = np.empty((count, lookback), dtype=np.float64)
    for i in range(count):
        windows[i] = scaled[i : i + lookback]
    targets = scaled[lookback:].copy()
    return WindowedDataset(windows=windows, targets=targets, lookback=lookback, scaler=scaler)


def chronological_split(series: Series, boundary: dt.date) -> tuple[Series, Series]:
    """(train, test) with train = dates <= boundary, test = the rest."""
    train = [r for r in series.records if r.date <= boundary]
    test = [r for r in series.records if r.date > boundary]
    if not train:
        raise SplitError(f"boundary {boundary} precedes the first date {series.records[0].date}")
    if not test:
        raise SplitError(f"boundary {boundary} leaves an empty test set (last date {series.records[-1].date})")
    col = series.target_column
    return (
        Series(records=tuple(train), target_column=col),
        Series(records=tuple(test), target_column=col),
    )
