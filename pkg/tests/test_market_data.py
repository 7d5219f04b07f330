import numpy as np
import pytest

from wavefx.errors import ValidationError
from wavefx.market_data import (
    Bar,
    EmptySeries,
    InvalidParameter,
    NonMonotonicTimestamps,
    ParseError,
    QuoteSeries,
    SyntheticSpec,
    generate,
    load_history,
    resample,
    write_csv,
)


def _write(tmp_path, text, name="quotes.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadHistory:
    def test_minimal_file(self, tmp_path):
        p = _write(
            tmp_path,
            "timestamp,open,high,low,close,spread\n"
            "0,1.0,1.0,1.0,1.0,0.0\n"
            "300,1.0,1.0,1.0,1.0,0.0\n",
        )
        s = load_history(p, "eurusd", 5)
        assert len(s) == 2
        assert s.timeframe == 5
        assert s.bar(1).timestamp == 300

    def test_non_monotonic(self, tmp_path):
        p = _write(
            tmp_path,
            "timestamp,open,high,low,close,spread\n"
            "300,1.0,1.0,1.0,1.0,0.0\n"
            "0,1.0,1.0,1.0,1.0,0.0\n",
        )
        with pytest.raises(NonMonotonicTimestamps):
            load_history(p, "eurusd", 5)

    def test_bad_close_reports_row(self, tmp_path):
        p = _write(
            tmp_path,
            "timestamp,open,high,low,close,spread\n0,1.0,1.0,1.0,abc,0.0\n",
        )
        with pytest.raises(ParseError) as err:
            load_history(p, "eurusd", 5)
        assert err.value.row == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_history(tmp_path / "nope.csv", "eurusd", 5)

    def test_bad_header(self, tmp_path):
        p = _write(tmp_path, "time,open,high,low,close,spread\n0,1,1,1,1,0\n")
        with pytest.raises(ParseError):
            load_history(p, "eurusd", 5)

    def test_ohlc_violation_rejected(self, tmp_path):
        p = _write(
            tmp_path,
            "timestamp,open,high,low,close,spread\n0,1.0,0.9,1.0,1.0,0.0\n",
        )
        with pytest.raises(ParseError):
            load_history(p, "eurusd", 5)

    def test_roundtrip_through_csv(self, tmp_path):
        series = generate(
            SyntheticSpec("gbm", {"sigma": 0.01, "dt": 1.0, "y0": 1.3}, 50, seed=5)
        )
        p = tmp_path / "rt.csv"
        write_csv(series, p)
        back = load_history(p, series.symbol, series.timeframe)
        assert np.allclose(back.close, series.close, atol=1e-5)
        assert np.array_equal(back.time, series.time)


class TestResample:
    def _series(self, closes, timeframe=5):
        closes = np.asarray(closes, dtype=float)
        opens = np.concatenate([[closes[0]], closes[:-1]])
        return QuoteSeries(
            "eurusd",
            timeframe,
            np.arange(len(closes), dtype=np.int64) * timeframe * 60,
            opens,
            np.maximum(opens, closes),
            np.minimum(opens, closes),
            closes,
            np.zeros(len(closes)),
        )

    def test_count_arithmetic(self):
        out = resample(self._series([1, 2, 3, 4, 5, 6]), 3)
        assert len(out) == 2
        assert out.timeframe == 15

    def test_first_open_last_close(self):
        s = self._series([1.0, 2.0, 3.0])
        out = resample(s, 3)
        assert len(out) == 1
        assert out.open[0] == s.open[0]
        assert out.close[0] == 3.0
        assert out.high[0] == s.high.max()
        assert out.low[0] == s.low.min()

    def test_trailing_group_dropped(self):
        out = resample(self._series(np.arange(7.0) + 1), 3)
        assert len(out) == 2

    def test_empty_series(self):
        empty = QuoteSeries(
            "eurusd", 5, np.empty(0, dtype=np.int64), *[np.empty(0) for _ in range(5)]
        )
        with pytest.raises(EmptySeries):
            resample(empty, 2)

    def test_composition(self):
        s = self._series(np.linspace(1.0, 2.0, 24))
        once = resample(resample(s, 2), 3)
        direct = resample(s, 6)
        assert np.array_equal(once.close, direct.close)
        assert np.array_equal(once.open, direct.open)
        assert np.array_equal(once.high, direct.high)
        assert np.array_equal(once.low, direct.low)
        assert np.array_equal(once.time, direct.time)


class TestGenerate:
    def test_zero_noise_wiener_is_constant(self):
        s = generate(SyntheticSpec("wiener", {"sigma": 0.0, "y0": 1.0}, 100, seed=1))
        assert len(s) == 100
        assert np.all(s.close == 1.0)

    def test_bit_reproducible(self):
        spec = SyntheticSpec("gbm", {"sigma": 0.01, "y0": 1.0}, 500, seed=9)
        assert np.array_equal(generate(spec).close, generate(spec).close)

    def test_logistic_step(self):
        s = generate(SyntheticSpec("logistic_map", {"r": 4.0, "y0": 0.3}, 3, seed=0))
        assert s.close[1] == pytest.approx(0.84)

    def test_ou_stationary_variance(self, ou_series):
        # closed-form stationary variance sigma^2 / (2 theta) = 0.125
        assert np.var(ou_series.close) == pytest.approx(0.125, rel=0.10)

    def test_ou_autocorrelation_decay(self, ou_series):
        x = ou_series.close - ou_series.close.mean()
        var = np.mean(x * x)
        for lag in (10, 50, 100):
            rho = np.mean(x[:-lag] * x[lag:]) / var
            assert rho == pytest.approx(np.exp(-1.0 * lag * 0.01), rel=0.10)

    def test_lorenz_runs_and_is_bounded(self):
        s = generate(SyntheticSpec("lorenz_x", {"dt": 0.01, "y0": 1.0}, 2000, seed=0))
        assert np.all(np.isfinite(s.close))
        assert np.max(np.abs(s.close)) < 100

    def test_invalid_parameters(self):
        with pytest.raises(InvalidParameter):
            SyntheticSpec("wiener", {"sigma": -1.0}, 10, seed=0)
        with pytest.raises(InvalidParameter):
            SyntheticSpec("wiener", {}, 1, seed=0)
        with pytest.raises(InvalidParameter):
            SyntheticSpec("wiener", {"dt": 0.0}, 10, seed=0)
        with pytest.raises(InvalidParameter):
            SyntheticSpec("brownian", {}, 10, seed=0)


class TestBarInvariants:
    def test_ohlc_ordering_enforced(self):
        with pytest.raises(ValidationError):
            QuoteSeries(
                "eurusd",
                5,
                np.array([0], dtype=np.int64),
                np.array([1.0]),
                np.array([0.5]),  # high below open
                np.array([0.4]),
                np.array([0.9]),
                np.array([0.0]),
            )

    def test_negative_spread_rejected(self):
        with pytest.raises(ValidationError):
            QuoteSeries(
                "eurusd",
                5,
                np.array([0], dtype=np.int64),
                np.array([1.0]),
                np.array([1.0]),
                np.array([1.0]),
                np.array([1.0]),
                np.array([-0.1]),
            )

    def test_bar_view(self):
        s = generate(SyntheticSpec("wiener", {"sigma": 0.0, "y0": 2.0}, 3, seed=0))
        bar = s.bar(0)
        assert isinstance(bar, Bar)
        assert bar.close == 2.0
