import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qfolio.errors import EmptySeries, InsufficientData, MalformedCsv, NonPositivePrice, ZeroVarianceWarning
from qfolio.market_data import (
    AssetStats,
    PriceSeries,
    ReturnSeries,
    bundled_path,
    compute_returns,
    compute_stats,
    load_prices,
    load_stats,
    example_stats,
)


def write(tmp_path, text, name="prices.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def series(column):
    import datetime as dt

    dates = [dt.date(2020, 1, 1) + dt.timedelta(days=i) for i in range(len(column))]
    return PriceSeries(("A",), tuple(dates), np.array(column, dtype=float)[:, None])


class TestLoadPrices:
    def test_single_ticker(self, tmp_path):
        p = load_prices(write(tmp_path, "date,A\n2020-01-01,100\n2020-01-02,110\n2020-01-03,99\n"))
        assert p.tickers == ("A",)
        np.testing.assert_array_equal(p.prices[:, 0], [100, 110, 99])

    def test_rows_sorted_by_date(self, tmp_path):
        p = load_prices(write(tmp_path, "date,A,B\n2020-01-03,3,30\n2020-01-01,1,10\n2020-01-02,2,20\n"))
        assert [d.day for d in p.dates] == [1, 2, 3]
        np.testing.assert_array_equal(p.prices, [[1, 10], [2, 20], [3, 30]])

    def test_duplicate_ticker(self, tmp_path):
        with pytest.raises(MalformedCsv):
            load_prices(write(tmp_path, "date,A,A\n2020-01-01,1,2\n2020-01-02,1,2\n"))

    def test_one_row_is_empty_series(self, tmp_path):
        with pytest.raises(EmptySeries):
            load_prices(write(tmp_path, "date,A\n2020-01-01,100\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="nope.csv"):
            load_prices(tmp_path / "nope.csv")

    def test_non_numeric_cell(self, tmp_path):
        with pytest.raises(MalformedCsv) as exc:
            load_prices(write(tmp_path, "date,A\n2020-01-01,100\n2020-01-02,abc\n"))
        assert exc.value.line == 3

    def test_non_positive_price(self, tmp_path):
        with pytest.raises(NonPositivePrice) as exc:
            load_prices(write(tmp_path, "date,A\n2020-01-01,100\n2020-01-02,0\n"))
        assert exc.value.line == 3

    def test_missing_cell_drops_whole_row(self, tmp_path):
        text = "date,A,B\n2020-01-01,1,10\n2020-01-02,,20\n2020-01-03,3,30\n"
        p = load_prices(write(tmp_path, text))
        assert len(p.dates) == 2
        np.testing.assert_array_equal(p.prices, [[1, 10], [3, 30]])

    def test_missing_cell_strict_mode(self, tmp_path):
        text = "date,A,B\n2020-01-01,1,10\n2020-01-02,NA,20\n2020-01-03,3,30\n"
        with pytest.raises(MalformedCsv):
            load_prices(write(tmp_path, text), on_missing="error")

    def test_duplicate_date(self, tmp_path):
        with pytest.raises(MalformedCsv):
            load_prices(write(tmp_path, "date,A\n2020-01-01,1\n2020-01-01,2\n"))

    def test_bad_date(self, tmp_path):
        with pytest.raises(MalformedCsv):
            load_prices(write(tmp_path, "date,A\n01/02/2020,1\n2020-01-03,2\n"))

    def test_bundled_synthetic_fixture(self):
        p = load_prices(bundled_path("prices_synthetic.csv"))
        assert p.tickers == ("BRKM5", "ITUB4", "KLBN4", "VALE3")
        assert len(p.dates) > 1000


class TestReturns:
    @pytest.mark.parametrize(
        "prices, expected",
        [([10, 10, 10], [0.0, 0.0]), ([100, 110, 99], [0.10, -0.10]), ([1, 2], [1.0])],
    )
    def test_examples(self, prices, expected):
        r = compute_returns(series(prices))
        np.testing.assert_allclose(r.returns[:, 0], expected, rtol=0, atol=1e-15)
        assert r.num_periods == len(prices) - 1

    @settings(max_examples=50, deadline=None)
    @given(
        arrays(float, (6, 3), elements=st.floats(0.01, 1e4)),
        st.floats(1e-3, 1e3),
    )
    def test_scale_free(self, prices, scale):
        import datetime as dt

        dates = tuple(dt.date(2020, 1, 1) + dt.timedelta(days=i) for i in range(6))
        a = compute_returns(PriceSeries(("A", "B", "C"), dates, prices))
        b = compute_returns(PriceSeries(("A", "B", "C"), dates, prices * scale))
        np.testing.assert_allclose(a.returns, b.returns, rtol=1e-12, atol=1e-12)
        assert np.all(a.returns > -1)


def two_pass_cov(r):
    # textbook double loop over the centered-product definition
    m, q = r.shape
    mu = [sum(r[t, i] for t in range(m)) / m for i in range(q)]
    cov = np.zeros((q, q))
    for i in range(q):
        for j in range(q):
            cov[i, j] = sum((r[t, i] - mu[i]) * (r[t, j] - mu[j]) for t in range(m)) / (m - 1)
    return np.array(mu), cov


class TestStats:
    def test_single_asset(self):
        s = compute_stats(ReturnSeries(("A",), np.array([[0.1], [-0.1]])))
        assert s.mu[0] == pytest.approx(0.0, abs=1e-15)
        assert s.cov[0, 0] == pytest.approx(0.02, rel=1e-12)

    def test_identical_columns(self):
        r = np.array([[0.1, 0.1], [-0.05, -0.05], [0.02, 0.02]])
        s = compute_stats(ReturnSeries(("A", "B"), r))
        np.testing.assert_allclose(s.corr, [[1, 1], [1, 1]], atol=1e-12)

    def test_insufficient(self):
        with pytest.raises(InsufficientData):
            compute_stats(ReturnSeries(("A",), np.array([[0.1]])))

    def test_zero_variance_asset(self):
        r = np.array([[0.1, 0.0], [-0.05, 0.0], [0.02, 0.0]])
        with pytest.warns(ZeroVarianceWarning):
            s = compute_stats(ReturnSeries(("A", "B"), r))
        np.testing.assert_array_equal(s.corr, [[1, 0], [0, 1]])

    def test_matches_two_pass(self, rng):
        for _ in range(20):
            r = rng.normal(0, 0.02, size=(5, 3))
            s = compute_stats(ReturnSeries(("A", "B", "C"), r))
            mu, cov = two_pass_cov(r)
            np.testing.assert_allclose(s.mu, mu, rtol=0, atol=1e-12)
            np.testing.assert_allclose(s.cov, cov, rtol=0, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, (7, 4), elements=st.floats(-0.5, 0.5)))
    def test_invariants(self, r):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ZeroVarianceWarning)
            s = compute_stats(ReturnSeries(("A", "B", "C", "D"), r))
        assert np.abs(s.cov - s.cov.T).max() <= 1e-12
        assert np.all(np.diag(s.cov) >= 0)
        assert np.all(np.diag(s.corr) == 1.0)
        assert np.abs(s.corr).max() <= 1 + 1e-12
        assert np.linalg.eigvalsh(s.cov).min() >= -1e-10
        var = np.diag(s.cov)
        for i in range(4):
            for j in range(4):
                if i != j and var[i] > 0 and var[j] > 0:
                    assert s.corr[i, j] == pytest.approx(s.cov[i, j] / (np.sqrt(var[i]) * np.sqrt(var[j])), abs=1e-12)

    def test_annualization(self):
        r = np.array([[0.01, 0.02], [0.03, -0.01], [0.0, 0.01]])
        s = compute_stats(ReturnSeries(("A", "B"), r), period_scale=250)
        np.testing.assert_allclose(s.annual_mu(), s.mu * 250)
        np.testing.assert_allclose(s.annual_cov(), s.cov * 250)
        np.testing.assert_allclose(s.annual_vol(), np.sqrt(np.diag(s.cov) * 250))

    def test_json_round_trip(self, tmp_path):
        r = np.array([[0.01, 0.02], [0.03, -0.01], [0.0, 0.01]])
        s = compute_stats(ReturnSeries(("A", "B"), r))
        path = tmp_path / "stats.json"
        path.write_text(json.dumps(s.to_dict()))
        assert set(json.loads(path.read_text())) == {"tickers", "mu", "cov", "corr", "period_scale"}
        back = load_stats(path)
        np.testing.assert_array_equal(back.cov, s.cov)
        assert back.period_scale == 250


def test_example_stats_fixture():
    s = example_stats()
    assert s.tickers == ("BRKM5", "ITUB4", "KLBN4", "VALE3")
    np.testing.assert_array_equal(s.annual_mu(), [0.32, 0.06, 0.11, 0.30])
    assert isinstance(s, AssetStats)
    np.testing.assert_array_equal(s.matrix("correlation"), s.matrix("covariance"))


def test_synthetic_fixture_pipeline():
    s = compute_stats(compute_returns(load_prices(bundled_path("prices_synthetic.csv"))))
    assert s.cov.shape == (4, 4)
    # drifts were generated from the annual means; sampling noise over ~6 years is large
    assert np.all(np.abs(s.annual_mu() - [0.32, 0.06, 0.11, 0.30]) < 0.35)
