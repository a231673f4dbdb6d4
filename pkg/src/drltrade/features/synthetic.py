"""Seeded synthetic OHLC series for tests and smoke runs."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .data import MarketSeries

# weekday masks (Mon..Sun) for numpy business-day calendars
CALENDARS = {
    "equity": "1111100",
    "fx": "1111110",
    "crypto": "1111111",
}


def trading_days(start: str, end: str, calendar: str = "equity") -> np.ndarray:
    """All trading dates in [start, end] under a weekly calendar mask."""
    mask = CALENDARS.get(calendar, calendar)
    days = np.arange(np.datetime64(start, "D"), np.datetime64(end, "D") + 1)
    return days[np.is_busday(days, weekmask=mask)]


def ohlc_from_closes(dates, closes, rng: np.random.Generator, wick: float = 0.002, start_price: Optional[float] = None) -> MarketSeries:
    """Wrap a close path in consistent open/high/low bars.

    The open is the previous close; highs and lows extend by a random
    fraction of ``wick`` beyond the body.
    """
    closes = np.asarray(closes, dtype=np.float64)
    opens = np.concatenate([[closes[0] if start_price is None else start_price], closes[:-1]])
    top = np.maximum(opens, closes)
    bottom = np.minimum(opens, closes)
    high = top * (1.0 + wick * rng.random(len(closes)))
    low = bottom * (1.0 - wick * rng.random(len(closes)))
    return MarketSeries(dates, opens, high, low, closes)


def random_walk_series(start: str = "2005-01-01", end: str = "2012-12-31", seed: int = 0,
                       drift: float = 0.0002, vol: float = 0.01, calendar: str = "equity",
                       price: float = 100.0) -> MarketSeries:
    """Geometric random walk with Gaussian simple returns."""
    rng = np.random.default_rng(seed)
    dates = trading_days(start, end, calendar)
    rets = drift + vol * rng.standard_normal(len(dates))
    closes = price * np.cumprod(1.0 + rets)
    return ohlc_from_closes(dates, closes, rng, start_price=price)


def regime_series(start: str = "2005-01-01", end: str = "2012-12-31", seed: int = 0,
                  drift: float = 0.001, vol: float = 0.002, regime: int = 60,
                  calendar: str = "equity", price: float = 100.0) -> MarketSeries:
    """Per-bar return ``+drift`` or ``-drift`` in alternating blocks of ``regime`` bars, plus noise."""
    rng = np.random.default_rng(seed)
    dates = trading_days(start, end, calendar)
    n = len(dates)
    sign = np.where((np.arange(n) // regime) % 2 == 0, 1.0, -1.0)
    rets = sign * drift + vol * rng.standard_normal(n)
    closes = price * np.cumprod(1.0 + rets)
    return ohlc_from_closes(dates, closes, rng, start_price=price)


def series_from_returns(dates: Sequence, returns: Sequence[float], price: float = 100.0, seed: int = 0) -> MarketSeries:
    """Closes compounding exactly the given simple returns from ``price``."""
    rng = np.random.default_rng(seed)
    closes = price * np.cumprod(1.0 + np.asarray(returns, dtype=np.float64))
    return ohlc_from_closes(np.asarray(dates, dtype="datetime64[D]"), closes, rng, start_price=price)
