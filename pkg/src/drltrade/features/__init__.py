"""Market data ingestion, indicators, normalization and observation windows."""

from .data import Bar, MarketSeries, Violation, file_sha256, load_csv, read_csv, validate_csv
from .indicators import atr, ema, log_returns, macd, rsi, sma, time_encoding, true_range
from .pipeline import (
    FeatureMatrix,
    FeatureSpec,
    Observation,
    Scaler,
    build_features,
    build_windows,
    fit_scaler,
    observation_at,
    position_onehot,
)
from .synthetic import random_walk_series, regime_series, series_from_returns, trading_days

__all__ = [
    "Bar", "MarketSeries", "Violation", "file_sha256", "load_csv", "read_csv", "validate_csv",
    "atr", "ema", "log_returns", "macd", "rsi", "sma", "time_encoding", "true_range",
    "FeatureMatrix", "FeatureSpec", "Observation", "Scaler", "build_features", "build_windows",
    "fit_scaler", "observation_at", "position_onehot",
    "random_walk_series", "regime_series", "series_from_returns", "trading_days",
]
