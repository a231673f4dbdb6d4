"""Feature matrix assembly, leak-free standardization and lookback windows."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, DataError
from . import indicators as ind
from .data import MarketSeries

N_POSITIONS = 3


@dataclass
class FeatureSpec:
    """Which features to compute. ``None`` or an empty tuple disables an entry.

    Price-level indicators are expressed relative to the close so that the
    matrix is scale free across assets and decades.
    """

    log_return: bool = True
    ohlc: bool = True
    rsi_period: Optional[int] = 14
    sma_periods: Tuple[int, ...] = (10, 50)
    ema_periods: Tuple[int, ...] = (10, 50)
    atr_period: Optional[int] = 14
    macd: Optional[Tuple[int, int, int]] = (12, 26, 9)
    time: bool = True

    def __post_init__(self):
        self.sma_periods = tuple(self.sma_periods or ())
        self.ema_periods = tuple(self.ema_periods or ())
        if self.macd is not None:
            self.macd = tuple(self.macd)
            if len(self.macd) != 3 or min(self.macd) < 1:
                raise ConfigError("macd needs (fast, slow, signal) periods >= 1")
        for p in (self.rsi_period, self.atr_period, *self.sma_periods, *self.ema_periods):
            if p is not None and p < 1:
                raise ConfigError(f"indicator period must be >= 1, got {p}")
        if not self.names():
            raise ConfigError("feature spec enables no features")

    def warmups(self) -> dict:
        """Index of the first fully defined row, per feature name."""
        w = {}
        if self.log_return:
            w["log_return"] = 1
        if self.ohlc:
            w.update({"open_rel": 0, "high_rel": 0, "low_rel": 0})
        if self.rsi_period:
            w["rsi"] = self.rsi_period
        for p in self.sma_periods:
            w[f"sma{p}_rel"] = p - 1
        for p in self.ema_periods:
            w[f"ema{p}_rel"] = p - 1
        if self.atr_period:
            w["atr_rel"] = self.atr_period
        if self.macd:
            fast, slow, signal = self.macd
            w["macd"] = max(fast, slow) - 1
            w["macd_signal"] = max(fast, slow) + signal - 2
            w["macd_hist"] = max(fast, slow) + signal - 2
        if self.time:
            w.update({"week_sin": 0, "week_cos": 0, "year_sin": 0, "year_cos": 0})
        return w

    def names(self) -> List[str]:
        return list(self.warmups())

    @property
    def warmup(self) -> int:
        return max(self.warmups().values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sma_periods"] = list(self.sma_periods)
        d["ema_periods"] = list(self.ema_periods)
        d["macd"] = list(self.macd) if self.macd else None
        return d


@dataclass
class FeatureMatrix:
    values: np.ndarray  # (n, F), NaN before warm-up
    names: List[str]
    dates: np.ndarray
    warmup: int

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


def build_features(series: MarketSeries, spec: Optional[FeatureSpec] = None) -> FeatureMatrix:
    """Compute every enabled feature for every bar of ``series``.

    Raises:
        DataError: the series is not longer than the warm-up.
    """
    spec = spec or FeatureSpec()
    n = len(series)
    if n <= spec.warmup:
        raise DataError(f"series has {n} bars, feature warm-up needs more than {spec.warmup}")
    c = series.close
    cols = []
    if spec.log_return:
        cols.append(np.concatenate([[np.nan], ind.log_returns(c)]))
    if spec.ohlc:
        cols += [series.open / c - 1.0, series.high / c - 1.0, series.low / c - 1.0]
    if spec.rsi_period:
        cols.append(ind.rsi(c, spec.rsi_period) / 100.0 - 0.5)
    for p in spec.sma_periods:
        cols.append(c / ind.sma(c, p) - 1.0)
    for p in spec.ema_periods:
        cols.append(c / ind.ema(c, p) - 1.0)
    if spec.atr_period:
        cols.append(ind.atr(series.high, series.low, c, spec.atr_period) / c)
    if spec.macd:
        cols += [x / c for x in ind.macd(c, *spec.macd)]
    if spec.time:
        enc = np.array([ind.time_encoding(d) for d in series.dates])
        cols += [enc[:, k] for k in range(4)]
    values = np.column_stack(cols)
    return FeatureMatrix(values, spec.names(), series.dates.copy(), spec.warmup)


@dataclass
class Scaler:
    mean: np.ndarray
    std: np.ndarray
    fit_start: np.datetime64
    fit_end: np.datetime64
    names: List[str] = field(default_factory=list)

    def transform(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(),
                "fit_start": str(self.fit_start), "fit_end": str(self.fit_end), "names": list(self.names)}


def fit_scaler(features: FeatureMatrix, start: int, stop: int) -> Scaler:
    """Per-feature mean and sample standard deviation over rows [start, stop).

    Raises:
        ConfigError: a feature is constant (or undefined) on the span.
        DataError: the span is empty or reaches into warm-up rows.
    """
    if stop <= start:
        raise DataError("scaler fit span is empty")
    if start < features.warmup:
        raise DataError(f"scaler fit span starts at row {start}, inside the warm-up ({features.warmup})")
    block = features.values[start:stop]
    if len(block) < 2:
        raise DataError("scaler needs at least two rows")
    mean = block.mean(axis=0)
    std = block.std(axis=0, ddof=1)
    bad = [features.names[k] for k in range(len(std)) if not (np.isfinite(std[k]) and std[k] > 0)]
    if bad:
        raise ConfigError(f"constant or undefined feature(s) on the fit span: {', '.join(bad)}")
    return Scaler(mean, std, features.dates[start], features.dates[stop - 1], list(features.names))


def position_onehot(position: int) -> np.ndarray:
    v = np.zeros(N_POSITIONS)
    v[int(position)] = 1.0
    return v


@dataclass(frozen=True)
class Observation:
    """Lookback feature window plus the current position, one-hot [Long, Short, Flat]."""

    window: np.ndarray  # (lookback, F)
    position: np.ndarray  # (3,)

    def flat(self) -> np.ndarray:
        """Input for dense networks: the window row-major, then the one-hot."""
        return np.concatenate([self.window.ravel(), self.position])

    def sequence(self) -> np.ndarray:
        """Input for sequence networks: the one-hot appended to every row."""
        return np.hstack([self.window, np.broadcast_to(self.position, (len(self.window), N_POSITIONS))])


def observation_at(values: np.ndarray, t: int, position: int, lookback: int) -> Observation:
    if t < lookback - 1:
        raise DataError(f"bar {t} has fewer than {lookback} rows of history")
    return Observation(values[t - lookback + 1:t + 1], position_onehot(position))


def build_windows(values, positions: Sequence[int], lookback: int) -> List[Observation]:
    """One observation per bar t >= lookback-1, stacking rows t-lookback+1..t.

    Args:
        values: (n, F) feature rows, already trimmed and scaled.
        positions: position held at each of the n bars.
    """
    values = np.asarray(values, dtype=np.float64)
    if lookback < 1:
        raise ConfigError("lookback must be >= 1")
    if len(values) < lookback:
        raise DataError(f"{len(values)} feature rows < lookback {lookback}")
    if len(positions) != len(values):
        raise DataError("positions and feature rows differ in length")
    return [observation_at(values, t, positions[t], lookback) for t in range(lookback - 1, len(values))]
