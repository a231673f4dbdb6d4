import datetime as dt
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drltrade.errors import ConfigError, DataError
from drltrade.features import (
    FeatureSpec,
    atr,
    build_features,
    build_windows,
    ema,
    fit_scaler,
    load_csv,
    log_returns,
    macd,
    random_walk_series,
    rsi,
    time_encoding,
    true_range,
    validate_csv,
)


# --- CSV ----------------------------------------------------------------------


def write(tmp_path, text, name="bars.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


GOOD = """timestamp,open,high,low,close
2020-01-02,1.0,1.2,0.9,1.1
2020-01-03,1.1,1.3,1.0,1.2
2020-01-06,1.2,1.25,1.15,1.2
"""


def test_well_formed_csv(tmp_path):
    p = write(tmp_path, GOOD)
    assert validate_csv(p) == []
    s = load_csv(p)
    assert len(s) == 3
    assert s.bar(1).close == 1.2
    assert s.dates[0] == np.datetime64("2020-01-02")


def test_swapped_high_low_names_line(tmp_path):
    p = write(tmp_path, GOOD.replace("2020-01-03,1.1,1.3,1.0,1.2", "2020-01-03,1.1,1.0,1.3,1.2"))
    v = validate_csv(p)
    assert [x.line for x in v] == [3]
    assert "OHLC" in v[0].message
    with pytest.raises(DataError, match="line 3"):
        load_csv(p)


def test_duplicate_timestamp_names_both_lines(tmp_path):
    p = write(tmp_path, GOOD + "2020-01-03,1.2,1.3,1.1,1.2\n")
    v = validate_csv(p)
    assert len(v) == 1
    assert v[0].line == 5
    assert "line 3" in v[0].message


def test_out_of_order_and_bad_rows(tmp_path):
    text = GOOD + "2020-01-01,1.0,1.1,0.9,1.0\n2020-01-07,abc,1,1,1\n2020-01-08,1,1,1\nnot-a-date,1,1,1,1\n"
    lines = [v.line for v in validate_csv(write(tmp_path, text))]
    assert lines == [5, 6, 7, 8]


def test_bad_header(tmp_path):
    v = validate_csv(write(tmp_path, GOOD.replace("timestamp", "date")))
    assert v[0].line == 1


def test_nonpositive_price(tmp_path):
    v = validate_csv(write(tmp_path, GOOD.replace("1.25,1.15,1.2", "1.25,-1.0,1.2")))
    assert [x.line for x in v] == [4]
    assert "positive" in v[0].message


def test_csv_round_trip(tmp_path):
    s = random_walk_series("2020-01-01", "2020-03-01", seed=3)
    s.to_csv(tmp_path / "x.csv")
    back = load_csv(tmp_path / "x.csv")
    np.testing.assert_array_equal(back.close, s.close)
    np.testing.assert_array_equal(back.dates, s.dates)


def test_iso_datetime_timestamps(tmp_path):
    text = "timestamp,open,high,low,close\n2020-01-02T23:00:00-02:00,1,1,1,1\n"
    s = load_csv(write(tmp_path, text))
    assert s.dates[0] == np.datetime64("2020-01-03")


# --- indicators ----------------------------------------------------------------


def test_log_returns():
    np.testing.assert_array_equal(log_returns([5.0] * 6), np.zeros(5))
    assert log_returns([100.0, 110.0])[0] == pytest.approx(0.09531018, abs=1e-8)
    assert log_returns([100.0, 50.0])[0] == pytest.approx(-0.69314718, abs=1e-8)
    with pytest.raises(DataError):
        log_returns([1.0, 0.0])


def spreadsheet_rsi(closes, period):
    """Row-by-row Wilder RSI with exact rationals."""
    c = [Fraction(x).limit_denominator(10**6) for x in closes]
    gains = [max(c[i] - c[i - 1], 0) for i in range(1, len(c))]
    losses = [max(c[i - 1] - c[i], 0) for i in range(1, len(c))]
    ag = sum(gains[:period]) / period
    al = sum(losses[:period]) / period
    rows = []
    for k in range(period, len(gains) + 1):
        if k > period:
            ag = (ag * (period - 1) + gains[k - 1]) / period
            al = (al * (period - 1) + losses[k - 1]) / period
        rows.append(100 - 100 / (1 + ag / al) if al else Fraction(100))
    return [float(x) for x in rows]


HAND15 = [44.34, 44.09, 44.15, 43.61, 44.33, 44.83, 45.10, 45.42, 45.84, 46.08, 45.89, 46.03, 45.61, 46.28, 46.28]


def test_rsi_hand_series():
    got = rsi(HAND15, 14)
    assert np.isnan(got[:14]).all()
    expected = spreadsheet_rsi(HAND15, 14)
    assert got[14] == pytest.approx(expected[0], abs=1e-8)
    assert got[14] == pytest.approx(70.46413502109705, abs=1e-8)


def test_rsi_longer_series_matches_spreadsheet():
    closes = list(random_walk_series("2020-01-01", "2020-06-30", seed=5).close)
    np.testing.assert_allclose(rsi(closes, 14)[14:], spreadsheet_rsi(closes, 14), atol=1e-8)


def test_rsi_monotone_extremes():
    assert np.all(rsi(np.arange(1.0, 40.0), 14)[14:] == 100.0)
    assert np.all(rsi(np.arange(40.0, 1.0, -1.0), 14)[14:] == 0.0)


def test_true_range_cases():
    assert true_range([10.0], [8.0], [9.0])[0] == 2.0
    assert true_range([12.0], [11.0], [9.0])[0] == 3.0


def test_atr_constant_and_hand():
    flat = np.full(20, 5.0)
    assert np.all(atr(flat, flat, flat, 14)[14:] == 0.0)
    h = np.array([10.0, 11.0, 12.0, 12.5])
    l = np.array([9.0, 10.0, 11.0, 10.0])
    c = np.array([9.5, 10.5, 11.5, 11.0])
    # TRs from bar 1: 1.5, 1.5, 2.5 -> seed mean(1.5, 1.5) then (1.5*1 + 2.5)/2
    got = atr(h, l, c, 2)
    assert np.isnan(got[:2]).all()
    assert got[2] == 1.5
    assert got[3] == 2.0


def spreadsheet_ema(xs, period):
    alpha = 2.0 / (period + 1)
    out = [None] * len(xs)
    prev = sum(xs[:period]) / period
    out[period - 1] = prev
    for t in range(period, len(xs)):
        prev = alpha * xs[t] + (1 - alpha) * prev
        out[t] = prev
    return out


def test_macd_step_series_matches_spreadsheet():
    closes = [10.0] * 30 + [12.0] * 30
    line, sig, hist = macd(closes, 12, 26, 9)
    fast = spreadsheet_ema(closes, 12)
    slow = spreadsheet_ema(closes, 26)
    exp_line = [fast[t] - slow[t] for t in range(25, 60)]
    exp_sig = spreadsheet_ema(exp_line, 9)
    np.testing.assert_allclose(line[25:], exp_line, atol=1e-12)
    np.testing.assert_allclose(sig[33:], exp_sig[8:], atol=1e-12)
    np.testing.assert_allclose(hist[33:], np.array(exp_line[8:]) - np.array(exp_sig[8:]), atol=1e-12)
    assert np.isnan(sig[:33]).all()


def test_macd_degenerate_cases():
    for out in macd(np.full(50, 7.0)):
        assert np.all(out[~np.isnan(out)] == 0.0)
    line, _, _ = macd(random_walk_series("2020-01-01", "2020-06-30").close, 12, 12, 9)
    assert np.all(line[11:] == 0.0)


def test_ema_constant():
    assert np.all(ema(np.full(10, 3.0), 4)[3:] == 3.0)


def test_time_encoding():
    for k in range(400):
        d = dt.date(2019, 1, 1) + dt.timedelta(days=k)
        sw, cw, sy, cy = time_encoding(d)
        assert sw * sw + cw * cw == pytest.approx(1.0, abs=1e-15)
        assert sy * sy + cy * cy == pytest.approx(1.0, abs=1e-15)
        assert time_encoding(d + dt.timedelta(days=7))[:2] == (sw, cw)
    mid = time_encoding(dt.date(2021, 7, 2))  # day 183 of 365
    assert abs(mid[2]) < 0.01
    assert mid[3] == pytest.approx(-1.0, abs=1e-3)


INDICATORS = {
    "rsi": lambda s: rsi(s.close, 14),
    "atr": lambda s: atr(s.high, s.low, s.close, 14),
    "macd": lambda s: np.column_stack(macd(s.close)),
    "ema": lambda s: ema(s.close, 10),
    "features": lambda s: build_features(s).values,
}


@pytest.mark.parametrize("name", sorted(INDICATORS))
def test_indicators_are_causal(name):
    s = random_walk_series("2018-01-01", "2018-12-31", seed=11)
    full = INDICATORS[name](s)
    rng = np.random.default_rng(0)
    for t in rng.integers(60, len(s) - 1, size=5):
        cut = INDICATORS[name](s[: t + 1])
        np.testing.assert_array_equal(full[: t + 1], cut)


# --- feature matrix / scaler / windows ------------------------------------------------


def test_features_finite_after_warmup():
    s = random_walk_series("2010-01-01", "2011-12-31", seed=2)
    fm = build_features(s)
    assert fm.values.shape == (len(s), len(FeatureSpec().names()))
    assert np.isfinite(fm.values[fm.warmup:]).all()
    assert not np.isfinite(fm.values[fm.warmup - 1]).all()


def test_feature_spec_subset():
    spec = FeatureSpec(ohlc=False, rsi_period=None, sma_periods=(), ema_periods=(5,), atr_period=None,
                       macd=None, time=False)
    assert spec.names() == ["log_return", "ema5_rel"]
    assert spec.warmup == 4
    with pytest.raises(ConfigError):
        FeatureSpec(log_return=False, ohlc=False, rsi_period=None, sma_periods=(), ema_periods=(),
                    atr_period=None, macd=None, time=False)


def test_scaler_hand_values():
    class FM:
        values = np.array([[1.0], [2.0], [3.0]])
        names = ["x"]
        dates = np.array(["2020-01-01", "2020-01-02", "2020-01-03"], dtype="datetime64[D]")
        warmup = 0

    sc = fit_scaler(FM, 0, 3)
    assert sc.mean[0] == 2.0
    assert sc.std[0] == 1.0
    assert sc.fit_end == np.datetime64("2020-01-03")


def test_scaler_standardizes_and_ignores_later_rows():
    s = random_walk_series("2010-01-01", "2013-12-31", seed=4)
    fm = build_features(s)
    sc = fit_scaler(fm, fm.warmup, 500)
    z = sc.transform(fm.values[fm.warmup:500])
    assert np.abs(z.mean(axis=0)).max() < 1e-10
    assert np.abs(z.std(axis=0, ddof=1) - 1.0).max() < 1e-8
    fm2 = build_features(s[:500])
    sc2 = fit_scaler(fm2, fm2.warmup, 500)
    assert np.array_equal(sc.mean, sc2.mean) and np.array_equal(sc.std, sc2.std)


def test_scaler_rejects_constant_feature():
    s = random_walk_series("2010-01-01", "2010-12-31", seed=4)
    fm = build_features(s)
    fm.values[:, 2] = 0.5
    with pytest.raises(ConfigError, match=fm.names[2]):
        fit_scaler(fm, fm.warmup, len(s))
    with pytest.raises(DataError):
        fit_scaler(fm, 0, len(s))


def test_build_windows_counts_and_content():
    rng = np.random.default_rng(0)
    values = rng.normal(size=(25, 4))
    pos = [2] * 25
    obs = build_windows(values, pos, 20)
    assert len(obs) == 6
    assert np.array_equal(obs[0].window, values[:20])
    np.testing.assert_array_equal(obs[0].position, [0, 0, 1])
    one = build_windows(values, pos, 1)
    assert np.array_equal(one[3].window, values[3:4])
    assert obs[0].flat().shape == (83,)
    assert obs[0].sequence().shape == (20, 7)
    with pytest.raises(DataError):
        build_windows(values[:5], pos[:5], 20)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 10))
def test_window_truncation_invariance(seed, lookback):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(30, 3))
    pos = list(rng.integers(0, 3, size=30))
    t = int(rng.integers(lookback - 1, 30))
    full = build_windows(values, pos, lookback)
    cut = build_windows(values[: t + 1], pos[: t + 1], lookback)
    k = t - (lookback - 1)
    assert np.array_equal(full[k].window, cut[-1].window)
    assert np.array_equal(full[k].position, cut[-1].position)
