import json
import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drltrade.errors import UndefinedMetricError
from drltrade.metrics import (
    REPORT_COLUMNS,
    EquityCurve,
    PerformanceReport,
    cagr,
    full_report,
    max_drawdown,
    reports_to_csv,
    sharpe,
    sortino,
    trade_stats,
)

from helpers import brute_force_drawdown


def test_cagr_cases():
    assert cagr(10_000, 14_444.74, 5) == pytest.approx(0.0763, abs=1e-4)
    assert cagr(10_000, 10_000, 3) == 0.0
    assert cagr(10_000, 20_000, 2) == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    with pytest.raises(ValueError):
        cagr(0.0, 1.0, 1.0)


def test_sharpe_cases():
    assert sharpe([0.01, -0.01, 0.01, -0.01], 252) == 0.0
    assert sharpe([0.01, -0.01, 0.02], 312) == pytest.approx(7.709, abs=1e-3)
    # mean 0.0066667, sample sd 0.0152753
    assert sharpe([0.01, -0.01, 0.02], 312) == pytest.approx(
        (0.02 / 3) / math.sqrt(((0.01 - 0.02 / 3) ** 2 + (-0.01 - 0.02 / 3) ** 2 + (0.02 - 0.02 / 3) ** 2) / 2)
        * math.sqrt(312), rel=1e-12)
    with pytest.raises(UndefinedMetricError):
        sharpe([0.01, 0.01, 0.01], 252)
    with pytest.raises(UndefinedMetricError):
        sharpe([0.01], 252)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.05, 0.05, allow_subnormal=False), min_size=3, max_size=50), st.floats(0.1, 100))
def test_sharpe_scale_invariance_and_sign(rets, c):
    r = np.array(rets)
    if r.std(ddof=1) < 1e-6:
        return
    assert sharpe(c * r, 252) == pytest.approx(sharpe(r, 252), rel=1e-9, abs=1e-9)
    assert sharpe(-r, 252) == pytest.approx(-sharpe(r, 252), rel=1e-12, abs=1e-12)


def test_sortino_cases():
    assert sortino([0.02, -0.01], 312) == pytest.approx(12.49, abs=1e-2)
    assert sortino([0.005, -0.01], 312) == pytest.approx(
        -0.0025 / math.sqrt(0.0001 / 2) * math.sqrt(312), rel=1e-12)
    assert sortino([-0.01] * 4, 365) == pytest.approx(-math.sqrt(365), rel=1e-12)
    assert sortino([0.01, -0.01], 252) == 0.0
    with pytest.raises(UndefinedMetricError):
        sortino([0.01, 0.0], 252)


def test_max_drawdown_cases():
    assert max_drawdown([1.0, 2.0, 3.0]) == (0.0, 0)
    assert max_drawdown([100, 120, 90, 110, 130]) == (-0.25, 3)
    assert max_drawdown([100, 80, 90]) == (pytest.approx(-0.2), 2)
    assert max_drawdown([5.0]) == (0.0, 0)


def test_drawdown_tie_convention():
    # the running max is touched again at index 2 before the trough
    assert max_drawdown([10, 8, 10, 5, 10]) == (-0.5, 2)
    assert brute_force_drawdown([10, 8, 10, 5, 10]) == (-0.5, 2)


def test_appending_new_highs_never_worsens():
    rng = np.random.default_rng(0)
    e = list(100 * np.cumprod(1 + rng.normal(0, 0.02, 300)))
    dd, _ = max_drawdown(e)
    e2 = e + [max(e) * 1.01, max(e) * 1.02]
    assert max_drawdown(e2)[0] >= dd


@pytest.mark.parametrize("kind", ["float", "integer"])
def test_drawdown_matches_brute_force(kind):
    rng = np.random.default_rng(42 if kind == "float" else 43)
    for _ in range(25):
        n = int(rng.integers(1, 300))
        if kind == "float":
            e = 100 * np.cumprod(1 + rng.normal(0, 0.02, n))
        else:
            e = 50 + np.cumsum(rng.integers(-2, 3, n)).astype(float)
            e = e - min(0.0, e.min()) + 1.0
        assert max_drawdown(e) == brute_force_drawdown(e)


def T(entry, exit_, provision=0.0, bars=1):
    return SimpleNamespace(entry_equity=entry, exit_equity=exit_, provision=provision, bars=bars)


def test_trade_stats_cases():
    s = trade_stats([], [2, 2, 2])
    assert s.total_trades == 0 and s.win_rate is None and s.avg_duration is None
    assert s.distribution() == (0, 0, 1)
    s = trade_stats([T(100, 102, 0.1, 3), T(102, 100.98, 0.1, 1)], [0, 0, 0, 1])
    assert s.win_rate == 0.5
    assert s.avg_duration == 2.0
    assert s.provision_sum == pytest.approx(0.2)
    assert sum(s.distribution()) == 1


def curve_of(values, start="2019-01-01"):
    return EquityCurve(np.datetime64(start) + np.arange(len(values)), values, values[0])


def test_full_report_constant_curve():
    rep = full_report(curve_of([10_000.0] * 10), [], [2] * 9, 252, years=1.0)
    assert rep.cagr == 0.0
    assert rep.max_drawdown == 0.0
    assert rep.sharpe is None and rep.sortino is None
    assert rep.pct_out == 100.0
    assert rep.win_rate is None


def test_full_report_fields_and_serialization():
    rng = np.random.default_rng(9)
    e = 10_000 * np.cumprod(np.concatenate([[1.0], 1 + rng.normal(0.001, 0.01, 100)]))
    positions = list(rng.integers(0, 3, 100))
    trades = [T(10_000, e[50], 1.0, 50), T(e[50], e[-1], 1.0, 50)]
    rep = full_report(curve_of(e), trades, positions, 312, name="x")
    assert rep.total_trades == 2
    assert rep.final_balance == e[-1]
    assert cagr(10_000, rep.final_balance, rep.years) == rep.cagr
    assert rep.annualized_std == pytest.approx(np.std(e[1:] / e[:-1] - 1, ddof=1) * math.sqrt(312))
    assert rep.bars_long + rep.bars_short + rep.bars_out == 100
    assert rep.pct_long + rep.pct_short + rep.pct_out == pytest.approx(100.0, abs=1e-12)
    back = PerformanceReport.from_dict(json.loads(rep.to_json()))
    assert back == rep
    csv_text = reports_to_csv([rep])
    header, row = csv_text.strip().split("\n")
    assert header.split(",") == REPORT_COLUMNS
    assert row.startswith("x,")


def test_full_report_length_check():
    with pytest.raises(ValueError):
        full_report(curve_of([1.0, 2.0]), [], [], 252)
