"""Monthly count series: CSV ingest, stats, normalization, windows, splits.

The CSV schema is UTF-8 with header ``month,count`` and rows
``YYYY-MM,<non-negative integer>`` on strictly increasing, gap-free
months.  Splits are chronological: the last 12 months are test, the 24
before them validation, the remainder training.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParseError

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")

VAL_MONTHS = 24
TEST_MONTHS = 12


def parse_month(text: str) -> tuple[int, int]:
    m = _MONTH_RE.match(text.strip())
    if not m:
        raise ParseError(f"month must look like YYYY-MM, got {text!r}")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise ParseError(f"month number must be 01..12, got {text!r}")
    return year, month


def format_month(ym: tuple[int, int]) -> str:
    return f"{ym[0]:04d}-{ym[1]:02d}"


def add_months(ym: tuple[int, int], delta: int) -> tuple[int, int]:
    total = ym[0] * 12 + (ym[1] - 1) + delta
    return total // 12, total % 12 + 1


@dataclass
class MonthlySeries:
    """Contiguous monthly counts starting at start_month."""

    start_month: tuple[int, int]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise DataError("a series needs a 1-D, non-empty value sequence")
        if not 1 <= self.start_month[1] <= 12:
            raise DataError(f"start month number out of range: {self.start_month}")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise DataError("counts must be finite and non-negative")

    def __len__(self) -> int:
        return int(self.values.size)

    def month_at(self, index: int) -> tuple[int, int]:
        return add_months(self.start_month, index)

    def months(self) -> list[str]:
        return [format_month(self.month_at(i)) for i in range(len(self))]


def load_csv(path) -> MonthlySeries:
    months: list[tuple[int, int]] = []
    counts: list[int] = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if lineno == 1:
                if [c.strip().lower() for c in row] != ["month", "count"]:
                    raise ParseError("header must be 'month,count'", line=1)
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", line=lineno)
            try:
                ym = parse_month(row[0])
            except ParseError as exc:
                raise ParseError(str(exc), line=lineno) from None
            try:
                count = int(row[1].strip())
            except ValueError:
                raise ParseError(f"count must be an integer, got {row[1]!r}",
                                 line=lineno) from None
            if count < 0:
                raise ParseError(f"count must be non-negative, got {count}", line=lineno)
            if months:
                expected = add_months(months[-1], 1)
                if ym == months[-1]:
                    raise DataError(f"duplicate month {format_month(ym)}")
                if ym != expected:
                    raise DataError(f"gap or out-of-order month at {format_month(ym)}; "
                                    f"expected {format_month(expected)}")
            months.append(ym)
            counts.append(count)
    if not months:
        raise DataError(f"{path}: no data rows")
    return MonthlySeries(months[0], np.array(counts, dtype=np.float64))


@dataclass
class DescriptiveStats:
    min: float
    mean: float
    max: float
    stddev: float
    variance: float


def describe(s: MonthlySeries) -> DescriptiveStats:
    """Population-convention summary statistics over the whole series."""
    if len(s) < 2:
        raise DataError("need at least 2 values to describe a series")
    v = s.values
    var = float(np.var(v))
    return DescriptiveStats(min=float(v.min()), mean=float(v.mean()),
                            max=float(v.max()), stddev=float(np.sqrt(var)),
                            variance=var)


@dataclass
class NormalizationParams:
    """Min-max scaling fitted on the training slice only."""

    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise DataError(f"degenerate series: max ({self.max}) must exceed "
                            f"min ({self.min})")

    def apply(self, x):
        return (np.asarray(x, dtype=np.float64) - self.min) / (self.max - self.min)

    def invert(self, x):
        return np.asarray(x, dtype=np.float64) * (self.max - self.min) + self.min


def fit_normalizer(train_slice) -> NormalizationParams:
    v = np.asarray(train_slice, dtype=np.float64)
    if v.size == 0:
        raise DataError("cannot fit a normalizer on an empty slice")
    return NormalizationParams(min=float(v.min()), max=float(v.max()))


@dataclass(frozen=True)
class SplitBounds:
    """Half-open index ranges: [0,train_end) train, [train_end,val_end)
    validation, [val_end,total) test."""

    train_end: int
    val_end: int
    total: int

    @property
    def train_len(self) -> int:
        return self.train_end

    @property
    def val_len(self) -> int:
        return self.val_end - self.train_end

    @property
    def test_len(self) -> int:
        return self.total - self.val_end

    def range_for(self, split: str) -> tuple[int, int]:
        if split == "train":
            return 0, self.train_end
        if split == "validation":
            return self.train_end, self.val_end
        if split == "test":
            return self.val_end, self.total
        raise ValueError(f"unknown split {split!r}")


def split(s: MonthlySeries, validation: int = VAL_MONTHS,
          test: int = TEST_MONTHS) -> SplitBounds:
    n = len(s)
    if n < validation + test + 1:
        raise DataError(f"series of {n} months is too short to split; "
                        f"need at least {validation + test + 1}")
    return SplitBounds(train_end=n - validation - test, val_end=n - test, total=n)


@dataclass
class WindowedDataset:
    """Stride-1 sliding windows over a value sequence.

    Sample i has inputs values[i:i+window] and target values[i+window];
    there are len(values) - window samples.  When bounds are present a
    sample belongs to the split containing its *target* index, so
    validation/test inputs warm-start from the prior split's tail.
    """

    values: np.ndarray
    window: int
    inputs: np.ndarray
    targets: np.ndarray
    bounds: SplitBounds | None = None

    def __len__(self) -> int:
        return int(self.targets.size)

    def target_index(self, sample: int) -> int:
        return sample + self.window

    def sample_range(self, split: str) -> tuple[int, int]:
        """Sample-index range whose targets fall inside the given split."""
        if self.bounds is None:
            raise DataError("dataset was windowed without split boundaries")
        lo, hi = self.bounds.range_for(split)
        lo = max(lo, self.window)
        if hi - lo < 1:
            raise DataError(f"{split} split holds no window targets")
        return lo - self.window, hi - self.window


def make_windows(values, window: int, bounds: SplitBounds | None = None) -> WindowedDataset:
    if isinstance(values, MonthlySeries):
        values = values.values
    v = np.ascontiguousarray(values, dtype=np.float64)
    if window < 1:
        raise DataError(f"window must be >= 1, got {window}")
    if v.size <= window:
        raise DataError(f"need more than {window} values to form windows, got {v.size}")
    if bounds is not None and bounds.total != v.size:
        raise DataError("split boundaries built for a different series length")
    n = v.size - window
    idx = np.arange(window)[None, :] + np.arange(n)[:, None]
    return WindowedDataset(values=v, window=window, inputs=v[idx],
                           targets=v[window:].copy(), bounds=bounds)
