import numpy as np
import pytest

from drltrade.benchmarks import BenchmarkSpec, annual_positions, buy_and_hold, perfect_annual, run_benchmark
from drltrade.errors import ConfigError
from drltrade.features import regime_series, trading_days
from drltrade.metrics import full_report


def yearly_series(year_returns, first_year=2019, steps=50):
    """Bars on the last day of the previous year and then ``steps`` bars per year.

    Each year compounds to exactly its given return, spread evenly.
    """
    dates = [np.datetime64(f"{first_year - 1}-12-31")]
    closes = [100.0]
    for k, r in enumerate(year_returns):
        days = np.datetime64(f"{first_year + k}-01-02") + np.arange(steps)
        step = (1 + r) ** (1 / steps)
        for d in days:
            dates.append(d)
            closes.append(closes[-1] * step)
    return np.array(dates, dtype="datetime64[D]"), np.array(closes)


def test_buy_and_hold_provisions():
    dates, closes = yearly_series([0.1, -0.05])
    for rate, expected in [(0.0001, 1.0), (0.00025, 2.5), (0.001, 10.0)]:
        res = buy_and_hold(dates, closes, BenchmarkSpec(provision=rate))
        assert sum(t.provision for t in res.trades) == expected
        assert len(res.trades) == 1


def test_buy_and_hold_flat_and_doubling():
    dates = np.datetime64("2020-01-01") + np.arange(10)
    res = buy_and_hold(dates, np.full(10, 5.0), BenchmarkSpec())
    assert res.curve.final == 9_999.0
    # one bar: the charge comes off after the move
    res = buy_and_hold(dates[:2], [5.0, 10.0], BenchmarkSpec())
    assert res.curve.final == 19_999.0
    # spread over many bars the opening charge compounds with the rest of the move
    res = buy_and_hold(dates, 5.0 * 2.0 ** (np.arange(10) / 9), BenchmarkSpec())
    assert res.curve.final == pytest.approx(19_998.0, abs=0.2)


def test_buy_and_hold_hand_compounding():
    rng = np.random.default_rng(0)
    rho = rng.normal(0, 0.01, 30)
    closes = 50 * np.concatenate([[1.0], np.cumprod(1 + rho)])
    dates = np.datetime64("2021-03-01") + np.arange(31)
    res = buy_and_hold(dates, closes, BenchmarkSpec(provision=0.0002))
    e = 10_000.0
    for k in range(30):
        r = closes[k + 1] / closes[k] - 1
        e = e * (1 + r) - (0.0002 * 10_000 if k == 0 else 0.0)
    assert res.curve.final == pytest.approx(e, rel=1e-13)
    rep = full_report(res.curve, res.trades, res.positions, 252)
    assert rep.final_balance == res.curve.final
    assert rep.pct_long == 100.0 and rep.avg_position_duration == 30


def test_perfect_annual_two_years():
    dates, closes = yearly_series([0.05, -0.05])
    spec = BenchmarkSpec(kind="perfect-annual", provision=0.0001)
    res = perfect_annual(dates, closes, spec)
    pos = res.positions
    assert pos[:50] == [0] * 50 and pos[50:] == [1] * 50
    assert len(res.trades) == 2
    # spreadsheet: provision on the first bar of each year, on the equity at that bar
    e = 10_000.0
    for k in range(100):
        sign = 1 if k < 50 else -1
        charge = 0.0001 * e if k in (0, 50) else 0.0
        e = e * (1 + sign * (closes[k + 1] / closes[k] - 1)) - charge
    assert res.curve.final == pytest.approx(e, rel=1e-13)


def test_perfect_annual_one_bar_per_year_hand_value():
    dates, closes = yearly_series([0.05, -0.05], steps=1)
    res = perfect_annual(dates, closes, BenchmarkSpec(kind="perfect-annual", provision=0.0001))
    assert res.positions == [0, 1]
    e1 = 10_000 * 1.05 - 1.0
    assert res.curve.final == pytest.approx(e1 * 1.05 - 0.0001 * e1, rel=1e-13)
    assert res.curve.final == pytest.approx(10_000 * 1.05 * 1.05 - 2.0, abs=0.1)


def test_perfect_annual_trade_count_rule():
    signs = [0.1, -0.1, -0.05, 0.2, 0.1]
    dates, closes = yearly_series(signs, steps=10)
    res = perfect_annual(dates, closes, BenchmarkSpec(kind="perfect-annual"))
    flips = sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))
    assert len(res.trades) == 1 + flips == 3


def test_perfect_annual_flat_year_keeps_position():
    dates, closes = yearly_series([-0.1, 0.0, 0.1], steps=5)
    pos = annual_positions(dates, closes)
    assert pos == [1] * 10 + [0] * 5


def test_perfect_annual_all_positive_equals_buy_and_hold():
    dates, closes = yearly_series([0.1, 0.2, 0.05], steps=20)
    pa = run_benchmark(dates, closes, BenchmarkSpec(kind="perfect-annual"))
    bh = run_benchmark(dates, closes, BenchmarkSpec())
    assert len(pa.trades) == 1
    assert np.array_equal(pa.curve.equity, bh.curve.equity)


def test_perfect_dominates_buy_and_hold_without_provision():
    for seed in range(5):
        s = regime_series("2015-01-01", "2019-12-31", seed=seed, regime=90)
        spec = dict(provision=0.0)
        pa = perfect_annual(s.dates, s.close, BenchmarkSpec(kind="perfect-annual", **spec))
        bh = buy_and_hold(s.dates, s.close, BenchmarkSpec(**spec))
        assert pa.curve.final >= bh.curve.final * (1 - 1e-12)


def test_bad_spec():
    with pytest.raises(ConfigError):
        BenchmarkSpec(kind="momentum")


def test_trading_days_calendars():
    assert len(trading_days("2024-01-01", "2024-01-07", "equity")) == 5
    assert len(trading_days("2024-01-01", "2024-01-07", "fx")) == 6
    assert len(trading_days("2024-01-01", "2024-01-07", "crypto")) == 7
