"""Causal technical indicators.

Every output has the input's length; entries before an indicator's warm-up
are NaN. Value t depends only on inputs at indices <= t.
"""

from __future__ import annotations

import datetime as dt
import math

import numpy as np

from ..errors import DataError


def _as_prices(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DataError("prices must be finite and positive")
    return x


def log_returns(closes) -> np.ndarray:
    """ln(close_t / close_{t-1}); the undefined first element is dropped (length n-1)."""
    c = _as_prices(closes)
    return np.log(c[1:] / c[:-1])


def sma(x, period: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.full(len(x), np.nan)
    if period < 1:
        raise ValueError("period must be >= 1")
    acc = 0.0
    for t in range(len(x)):
        acc += x[t]
        if t >= period:
            acc -= x[t - period]
        if t >= period - 1:
            out[t] = acc / period
    return out


def ema(x, period: int, start: int = 0) -> np.ndarray:
    """Exponential moving average with alpha = 2/(period+1).

    Seeded with the simple mean of the first ``period`` values from
    ``start`` (leading NaNs in ``x`` are skipped this way).
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.full(len(x), np.nan)
    seed_at = start + period - 1
    if seed_at >= len(x):
        return out
    alpha = 2.0 / (period + 1.0)
    prev = float(np.mean(x[start:seed_at + 1]))
    out[seed_at] = prev
    for t in range(seed_at + 1, len(x)):
        prev = alpha * x[t] + (1.0 - alpha) * prev
        out[t] = prev
    return out


def _wilder(values, period: int, first: int) -> np.ndarray:
    """Wilder smoothing of ``values`` whose first defined entry is at ``first``.

    The seed at ``first + period - 1`` is the plain mean of the first
    ``period`` values; afterwards avg = (avg*(period-1) + v) / period.
    """
    out = np.full(len(values), np.nan)
    seed_at = first + period - 1
    if seed_at >= len(values):
        return out
    avg = float(np.mean(values[first:seed_at + 1]))
    out[seed_at] = avg
    for t in range(seed_at + 1, len(values)):
        avg = (avg * (period - 1) + values[t]) / period
        out[t] = avg
    return out


def rsi(closes, period: int = 14) -> np.ndarray:
    """Wilder RSI in [0, 100]; first defined value at index ``period``.

    An all-loss window gives 0, an all-gain window 100, and a window with
    no movement at all gives 50.
    """
    c = np.asarray(closes, dtype=np.float64)
    if len(c) <= period:
        raise DataError(f"rsi needs more than {period} closes, got {len(c)}")
    diff = np.concatenate([[np.nan], np.diff(c)])
    gain = np.where(diff > 0, diff, 0.0)
    loss = np.where(diff < 0, -diff, 0.0)
    avg_gain = _wilder(gain, period, 1)
    avg_loss = _wilder(loss, period, 1)
    out = np.full(len(c), np.nan)
    for t in range(period, len(c)):
        g, l = avg_gain[t], avg_loss[t]
        if l == 0.0:
            out[t] = 50.0 if g == 0.0 else 100.0
        else:
            out[t] = 100.0 - 100.0 / (1.0 + g / l)
    return out


def true_range(high, low, prev_close) -> np.ndarray:
    high, low, prev_close = (np.asarray(a, dtype=np.float64) for a in (high, low, prev_close))
    return np.maximum.reduce([high - low, np.abs(high - prev_close), np.abs(low - prev_close)])


def atr(high, low, close, period: int = 14) -> np.ndarray:
    """Wilder-smoothed true range; first defined value at index ``period``."""
    high, low, close = (np.asarray(a, dtype=np.float64) for a in (high, low, close))
    if len(close) <= period:
        raise DataError(f"atr needs more than {period} bars, got {len(close)}")
    tr = np.full(len(close), np.nan)
    tr[1:] = true_range(high[1:], low[1:], close[:-1])
    return _wilder(tr, period, 1)


def macd(closes, fast: int = 12, slow: int = 26, signal: int = 9):
    """Returns (macd line, signal line, histogram).

    The line is defined from index ``max(fast, slow) - 1``, the signal and
    histogram ``signal - 1`` bars later.
    """
    c = np.asarray(closes, dtype=np.float64)
    if len(c) <= slow + signal:
        raise DataError(f"macd needs more than {slow + signal} closes, got {len(c)}")
    line = ema(c, fast) - ema(c, slow)
    sig = ema(line, signal, start=max(fast, slow) - 1)
    return line, sig, line - sig


def time_encoding(date) -> tuple:
    """(sin_week, cos_week, sin_year, cos_year) for a calendar date.

    Weekly phase is weekday/7 (Monday = 0); yearly phase is
    (day-of-year - 1) / days-in-year.
    """
    if isinstance(date, np.datetime64):
        date = date.astype("datetime64[D]").astype(dt.date)
    week = date.weekday() / 7.0
    days = 366 if (date.year % 4 == 0 and (date.year % 100 != 0 or date.year % 400 == 0)) else 365
    year = (date.timetuple().tm_yday - 1) / days
    tau = 2.0 * math.pi
    return (math.sin(tau * week), math.cos(tau * week), math.sin(tau * year), math.cos(tau * year))
