"""OHLC bar series and the CSV contract (timestamp,open,high,low,close)."""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np

from ..errors import DataError

HEADER = ["timestamp", "open", "high", "low", "close"]


@dataclass(frozen=True)
class Bar:
    timestamp: dt.date
    open: float
    high: float
    low: float
    close: float

    def is_consistent(self) -> bool:
        return self.low <= min(self.open, self.close) <= max(self.open, self.close) <= self.high


@dataclass
class MarketSeries:
    """Column-oriented daily bars with strictly increasing dates."""

    dates: np.ndarray  # datetime64[D]
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray

    def __post_init__(self):
        self.dates = np.asarray(self.dates, dtype="datetime64[D]")
        for name in ("open", "high", "low", "close"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        n = len(self.dates)
        if any(len(getattr(self, c)) != n for c in ("open", "high", "low", "close")):
            raise DataError("OHLC columns and dates differ in length")
        if n > 1 and not np.all(self.dates[1:] > self.dates[:-1]):
            raise DataError("dates must be strictly increasing")

    def __len__(self) -> int:
        return len(self.dates)

    def __getitem__(self, key) -> "MarketSeries":
        if isinstance(key, int):
            raise TypeError("index with a slice; use bar(i) for a single Bar")
        return MarketSeries(self.dates[key], self.open[key], self.high[key], self.low[key], self.close[key])

    def bar(self, i: int) -> Bar:
        return Bar(self.dates[i].astype(dt.date), float(self.open[i]), float(self.high[i]),
                   float(self.low[i]), float(self.close[i]))

    @property
    def years(self) -> np.ndarray:
        return self.dates.astype("datetime64[Y]").astype(int) + 1970

    @classmethod
    def from_bars(cls, bars: List[Bar]) -> "MarketSeries":
        return cls(
            np.array([b.timestamp for b in bars], dtype="datetime64[D]"),
            [b.open for b in bars], [b.high for b in bars], [b.low for b in bars], [b.close for b in bars],
        )

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(HEADER)
            for i in range(len(self)):
                w.writerow([str(self.dates[i]), repr(float(self.open[i])), repr(float(self.high[i])),
                            repr(float(self.low[i])), repr(float(self.close[i]))])


@dataclass(frozen=True)
class Violation:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


def _parse_date(text: str) -> dt.date:
    text = text.strip()
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        stamp = dt.datetime.fromisoformat(text.replace("Z", "+00:00"))
        if stamp.tzinfo is not None:
            stamp = stamp.astimezone(dt.timezone.utc)
        return stamp.date()


def read_csv(path: Union[str, Path]):
    """Parse a bar CSV without raising on content problems.

    Returns:
        (bars, violations). Rows with violations are still returned when
        they parse, so callers can report everything in one pass.
    """
    bars: List[Bar] = []
    violations: List[Violation] = []
    seen = {}
    prev_date = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return bars, [Violation(1, "empty file (header row required)")]
        if [h.strip().lower() for h in header] != HEADER:
            violations.append(Violation(1, f"header must be {','.join(HEADER)}, got {','.join(header)}"))
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                violations.append(Violation(line_no, f"expected 5 fields, got {len(row)}"))
                continue
            try:
                date = _parse_date(row[0])
            except ValueError:
                violations.append(Violation(line_no, f"unparsable timestamp {row[0]!r}"))
                continue
            try:
                o, h, l, c = (float(x) for x in row[1:])
            except ValueError:
                violations.append(Violation(line_no, "non-numeric price"))
                continue
            if not all(math.isfinite(p) and p > 0 for p in (o, h, l, c)):
                violations.append(Violation(line_no, "prices must be finite and positive"))
            bar = Bar(date, o, h, l, c)
            if not bar.is_consistent():
                violations.append(Violation(line_no, "OHLC inconsistent: need low <= min(open, close) <= max(open, close) <= high"))
            if date in seen:
                violations.append(Violation(line_no, f"duplicate timestamp {date} (also on line {seen[date]})"))
            elif prev_date is not None and date < prev_date:
                violations.append(Violation(line_no, f"timestamp {date} earlier than previous row {prev_date}"))
            seen.setdefault(date, line_no)
            prev_date = date if prev_date is None else max(prev_date, date)
            bars.append(bar)
    return bars, violations


def validate_csv(path: Union[str, Path]) -> List[Violation]:
    return read_csv(path)[1]


def load_csv(path: Union[str, Path]) -> MarketSeries:
    """Load a validated series; any violation raises DataError listing all of them."""
    bars, violations = read_csv(path)
    if violations:
        raise DataError("; ".join(str(v) for v in violations))
    if not bars:
        raise DataError(f"{path}: no bars")
    return MarketSeries.from_bars(bars)


def file_sha256(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
