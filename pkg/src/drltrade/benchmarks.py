"""Reference strategies: buy-and-hold and the perfect-foresight annual strategy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import ConfigError, DataError
from .market import Position, SimulationResult, simulate

KINDS = ("buy-and-hold", "perfect-annual")


@dataclass
class BenchmarkSpec:
    kind: str = "buy-and-hold"
    provision: float = 0.0001
    initial_capital: float = 10_000.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown benchmark {self.kind!r}; expected one of {KINDS}")
        if self.provision < 0:
            raise ConfigError("provision rate must be >= 0")


def _check(dates, closes):
    closes = np.asarray(closes, dtype=np.float64)
    dates = np.asarray(dates, dtype="datetime64[D]")
    if len(closes) < 2 or len(dates) != len(closes):
        raise DataError("benchmark needs at least two bars with matching dates")
    return dates, closes


def buy_and_hold(dates, closes, spec: BenchmarkSpec) -> SimulationResult:
    """Long from the first bar to the last: one opening, one provision."""
    dates, closes = _check(dates, closes)
    return simulate(dates, closes, [Position.LONG] * (len(closes) - 1), spec.provision, spec.initial_capital)


def annual_positions(dates, closes) -> List[int]:
    """Per-step positions of the perfect annual strategy.

    Step t (bar t to t+1) belongs to the calendar year of bar t+1. Each year
    takes the sign of its close-to-close return, measured from the bar
    before its first step; a year with exactly zero return keeps the
    previous position (Long for the first year).
    """
    dates, closes = _check(dates, closes)
    step_years = dates[1:].astype("datetime64[Y]").astype(int)
    positions = []
    prev = Position.LONG
    start = 0
    n = len(step_years)
    while start < n:
        stop = start
        while stop < n and step_years[stop] == step_years[start]:
            stop += 1
        ret = closes[stop] / closes[start] - 1.0
        if ret > 0:
            prev = Position.LONG
        elif ret < 0:
            prev = Position.SHORT
        positions += [int(prev)] * (stop - start)
        start = stop
    return positions


def perfect_annual(dates, closes, spec: BenchmarkSpec) -> SimulationResult:
    dates, closes = _check(dates, closes)
    return simulate(dates, closes, annual_positions(dates, closes), spec.provision, spec.initial_capital)


def run_benchmark(dates, closes, spec: BenchmarkSpec) -> SimulationResult:
    return (buy_and_hold if spec.kind == "buy-and-hold" else perfect_annual)(dates, closes, spec)
