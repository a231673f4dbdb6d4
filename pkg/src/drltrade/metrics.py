"""Performance statistics over equity curves and trade logs.

Undefined statistics raise ``UndefinedMetricError`` from the individual
functions and appear as ``None`` in a ``PerformanceReport``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import UndefinedMetricError

ANNUALIZATION = {"fx": 312, "equity": 252, "crypto": 365}
DAYS_PER_YEAR = 365.25


@dataclass
class EquityCurve:
    dates: np.ndarray  # datetime64[D], strictly increasing
    equity: np.ndarray
    initial: float

    def __post_init__(self):
        self.dates = np.asarray(self.dates, dtype="datetime64[D]")
        self.equity = np.asarray(self.equity, dtype=np.float64)
        if len(self.dates) != len(self.equity):
            raise ValueError("dates and equity differ in length")
        if len(self.dates) > 1 and not np.all(self.dates[1:] > self.dates[:-1]):
            raise ValueError("curve dates must be strictly increasing")

    def __len__(self) -> int:
        return len(self.equity)

    @property
    def final(self) -> float:
        return float(self.equity[-1])

    def returns(self) -> np.ndarray:
        return self.equity[1:] / self.equity[:-1] - 1.0

    @property
    def years(self) -> float:
        return float((self.dates[-1] - self.dates[0]).astype(int)) / DAYS_PER_YEAR


def cagr(begin: float, end: float, years: float) -> float:
    if begin <= 0:
        raise ValueError("begin must be positive")
    if years <= 0:
        raise ValueError("years must be positive")
    return (end / begin) ** (1.0 / years) - 1.0


def sharpe(returns, N: float) -> float:
    """Annualized mean / sample std of per-bar returns, risk-free rate 0."""
    r = np.asarray(returns, dtype=np.float64)
    if len(r) < 2:
        raise UndefinedMetricError("sharpe needs at least two returns")
    sd = r.std(ddof=1)
    if sd == 0.0:
        raise UndefinedMetricError("sharpe undefined: returns have zero variance")
    return float(r.mean() / sd * math.sqrt(N))


def sortino(returns, N: float) -> float:
    """Annualized mean / downside deviation, downside over all n observations."""
    r = np.asarray(returns, dtype=np.float64)
    neg = np.minimum(r, 0.0)
    if not np.any(neg < 0):
        raise UndefinedMetricError("sortino undefined: no negative returns")
    dd = math.sqrt(float(np.sum(neg * neg)) / len(r))
    return float(r.mean() / dd * math.sqrt(N))


def max_drawdown(equity):
    """Worst peak-to-trough fraction (<= 0) and its duration in bars.

    The peak is the latest bar at the running maximum before the worst
    trough (earliest trough on ties). Duration counts bars from that peak
    until equity first gets back to it, or to the end of the curve.
    """
    e = np.asarray(equity.equity if isinstance(equity, EquityCurve) else equity, dtype=np.float64)
    if len(e) == 0:
        raise ValueError("empty curve")
    peak_val, peak_idx = e[0], 0
    worst, worst_peak = 0.0, 0
    for j in range(len(e)):
        if e[j] >= peak_val:
            peak_val, peak_idx = e[j], j
        dd = e[j] / peak_val - 1.0
        if dd < worst:
            worst, worst_peak = dd, peak_idx
    if worst == 0.0:
        return 0.0, 0
    target = e[worst_peak]
    later = np.nonzero(e[worst_peak + 1:] >= target)[0]
    end = worst_peak + 1 + int(later[0]) if len(later) else len(e) - 1
    return float(worst), int(end - worst_peak)


@dataclass
class TradeStats:
    total_trades: int
    avg_duration: Optional[float]
    win_rate: Optional[float]
    provision_sum: float
    bars_long: int
    bars_short: int
    bars_out: int

    def distribution(self):
        """Exact (long, short, out) shares of bars as Fractions summing to 1."""
        total = self.bars_long + self.bars_short + self.bars_out
        if total == 0:
            return Fraction(0), Fraction(0), Fraction(1)
        return (Fraction(self.bars_long, total), Fraction(self.bars_short, total), Fraction(self.bars_out, total))


def trade_stats(trades: Sequence, positions: Sequence[int]) -> TradeStats:
    """Summarize a trade log and the per-step position sequence.

    Args:
        trades: records with ``entry_equity``, ``exit_equity``, ``provision``
            and ``bars`` attributes.
        positions: position held over each step (0 Long, 1 Short, 2 Flat).
    """
    pos = np.asarray(positions, dtype=int)
    n = len(trades)
    return TradeStats(
        total_trades=n,
        avg_duration=float(np.mean([t.bars for t in trades])) if n else None,
        win_rate=sum(bool(t.exit_equity > t.entry_equity) for t in trades) / n if n else None,
        provision_sum=float(sum(t.provision for t in trades)),
        bars_long=int(np.sum(pos == 0)),
        bars_short=int(np.sum(pos == 1)),
        bars_out=int(np.sum(pos == 2)),
    )


# Table column order for CSV export.
REPORT_COLUMNS = [
    "name", "final_balance", "provision_sum", "total_trades", "cagr", "annualized_std",
    "sharpe", "sortino", "max_drawdown", "max_drawdown_duration", "avg_position_duration",
    "win_rate", "pct_long", "pct_short", "pct_out",
]


@dataclass
class PerformanceReport:
    name: str
    final_balance: float
    provision_sum: float
    total_trades: int
    cagr: Optional[float]
    annualized_std: Optional[float]
    sharpe: Optional[float]
    sortino: Optional[float]
    max_drawdown: float
    max_drawdown_duration: int
    avg_position_duration: Optional[float]
    win_rate: Optional[float]
    pct_long: float
    pct_short: float
    pct_out: float
    bars_long: int = 0
    bars_short: int = 0
    bars_out: int = 0
    initial_balance: float = 0.0
    years: float = 0.0
    periods_per_year: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "PerformanceReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def csv_row(self) -> list:
        return ["" if getattr(self, c) is None else getattr(self, c) for c in REPORT_COLUMNS]


def reports_to_csv(reports: Sequence[PerformanceReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r.csv_row()])
    return buf.getvalue()


def _maybe(fn, *args):
    try:
        return fn(*args)
    except UndefinedMetricError:
        return None


def full_report(curve: EquityCurve, trades: Sequence, positions: Sequence[int], N: float,
                years: Optional[float] = None, name: str = "") -> PerformanceReport:
    """Every table column for one strategy.

    Args:
        curve: equity sampled at the decision bar and every bar after it.
        trades: closed trade records.
        positions: position held over each step, ``len(curve) - 1`` entries.
        N: periods per year for annualization.
        years: CAGR exponent; defaults to the curve's calendar span / 365.25.
    """
    if len(positions) != len(curve) - 1:
        raise ValueError("need one position per step of the curve")
    rets = curve.returns()
    years = curve.years if years is None else years
    stats = trade_stats(trades, positions)
    dd, dd_len = max_drawdown(curve)
    sd = float(rets.std(ddof=1) * math.sqrt(N)) if len(rets) > 1 else None
    long_, short, out = stats.distribution()
    return PerformanceReport(
        name=name,
        final_balance=curve.final,
        provision_sum=stats.provision_sum,
        total_trades=stats.total_trades,
        cagr=cagr(curve.initial, curve.final, years) if years > 0 else None,
        annualized_std=sd,
        sharpe=_maybe(sharpe, rets, N),
        sortino=_maybe(sortino, rets, N),
        max_drawdown=dd,
        max_drawdown_duration=dd_len,
        avg_position_duration=stats.avg_duration,
        win_rate=stats.win_rate,
        pct_long=float(long_ * 100),
        pct_short=float(short * 100),
        pct_out=float(out * 100),
        bars_long=stats.bars_long,
        bars_short=stats.bars_short,
        bars_out=stats.bars_out,
        initial_balance=float(curve.initial),
        years=float(years),
        periods_per_year=float(N),
    )
