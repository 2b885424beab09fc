import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TURKEY_START
from segtrend.data import (
    CountryPanel,
    QualityReport,
    SeriesSelector,
    align_threshold,
    cumulative_from_daily,
    derive_active,
    derive_daily,
    fill_gaps,
    format_csv,
    log_transform,
    parse_csv,
    parse_series_csv,
    per_million,
    select_series,
)
from segtrend.errors import (
    DataError,
    DateOrderError,
    GapError,
    MissingPopulation,
    NonPositiveValue,
    ParseError,
    SchemaError,
    ThresholdNotReached,
)

D0 = dt.date(2020, 3, 18)


def panel(confirmed, recovered=None, deaths=None, population=None, start=D0):
    n = len(confirmed)
    dates = [start + dt.timedelta(days=i) for i in range(n)]
    return CountryPanel(
        "XYZ", dates, confirmed, recovered if recovered is not None else [0] * n,
        deaths if deaths is not None else [0] * n, population,
    )


class TestParse:
    def test_three_rows(self):
        p = parse_csv("date,confirmed,recovered,deaths\n2020-03-18,1,0,0\n2020-03-19,2,0,0\n2020-03-20,5,1,0\n")
        assert len(p) == 3
        assert p.confirmed.tolist() == [1, 2, 5]
        assert p.population is None

    def test_descending_date_reports_line(self):
        text = "date,confirmed,recovered,deaths\n2020-03-19,1,0,0\n2020-03-18,2,0,0\n"
        with pytest.raises(DateOrderError) as info:
            parse_csv(text)
        assert info.value.line == 3

    def test_missing_column_named(self):
        with pytest.raises(SchemaError) as info:
            parse_csv("date,confirmed,recovered\n2020-03-18,1,0\n")
        assert info.value.column == "deaths"
        assert "deaths" in str(info.value)

    def test_malformed_count(self):
        with pytest.raises(ParseError) as info:
            parse_csv("date,confirmed,recovered,deaths\n2020-03-18,1,0,0\n2020-03-19,x,0,0\n")
        assert info.value.line == 3

    def test_crlf_bom_extra_columns_population(self):
        text = "\ufeffDate,deaths,confirmed,recovered,iso,population\r\n2020-03-18,0,4,1,TUR,82000000\r\n"
        p = parse_csv(text)
        assert p.confirmed.tolist() == [4]
        assert p.recovered.tolist() == [1]
        assert p.population == 82_000_000

    def test_series_file(self):
        ts = parse_series_csv("date,value\n2020-01-01,1.5\n2020-01-02,2\n2020-01-03,3\n")
        assert ts.n == 3 and ts.origin_date == dt.date(2020, 1, 1)
        with pytest.raises(GapError):
            parse_series_csv("date,value\n2020-01-01,1\n2020-01-03,2\n2020-01-04,3\n")

    @settings(max_examples=50)
    @given(
        st.lists(st.tuples(st.integers(0, 10**7), st.integers(0, 10**6), st.integers(0, 10**5)), min_size=1, max_size=40),
        st.one_of(st.none(), st.integers(1, 2 * 10**9)),
    )
    def test_round_trip_fixed_point(self, rows, population):
        c, r, d = (list(col) for col in zip(*rows))
        p = panel(c, r, d, population)
        text = format_csv(p)
        again = parse_csv(text, "XYZ")
        assert again == p
        assert format_csv(again) == text


class TestFillGaps:
    def test_carry_forward(self):
        p = CountryPanel("X", [D0, D0 + dt.timedelta(days=2)], [10, 14], [1, 2], [0, 1])
        q = QualityReport()
        filled = fill_gaps(p, True, q)
        assert len(filled) == 3
        assert filled.confirmed.tolist() == [10, 10, 14]
        assert filled.recovered.tolist() == [1, 1, 2]
        assert q.filled_dates == ["2020-03-19"]

    def test_no_gaps_is_identity(self):
        p = panel([1, 2, 3])
        assert fill_gaps(p, True) is p

    def test_disabled_raises_with_date(self):
        p = CountryPanel("X", [D0, D0 + dt.timedelta(days=3)], [10, 14], [0, 0], [0, 0])
        with pytest.raises(GapError) as info:
            fill_gaps(p, False)
        assert info.value.missing == dt.date(2020, 3, 19)


class TestDerive:
    def test_daily_examples(self):
        assert derive_daily([100, 110, 125]).tolist() == [10, 15]
        assert derive_daily([5, 5, 5]).tolist() == [0, 0]

    def test_daily_revision_is_kept_and_flagged(self):
        q = QualityReport()
        assert derive_daily([10, 8], q).tolist() == [-2]
        assert len(q.revisions) == 1 and q.revisions[0]["value"] == -2

    def test_active_examples(self):
        p = CountryPanel("X", [D0, D0 + dt.timedelta(1), D0 + dt.timedelta(2)], [100, 110, 125], [0, 5, 10], [1, 2, 2])
        assert derive_active(p).tolist() == [99, 103, 113]
        assert derive_active(panel([0, 0, 0])).tolist() == [0, 0, 0]

    def test_negative_active_flagged(self):
        q = QualityReport()
        assert derive_active(CountryPanel("X", [D0], [10], [5], [6]), q).tolist() == [-1]
        assert q.to_dict()["negative_active"] == 1

    @settings(max_examples=50)
    @given(st.lists(st.integers(-1000, 10**6), min_size=2, max_size=60))
    def test_cumsum_inverts_differencing(self, c):
        c = np.array(c, dtype=np.int64)
        assert np.array_equal(cumulative_from_daily(c[0], derive_daily(c)), c)

    @settings(max_examples=50)
    @given(
        st.lists(st.tuples(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6)), min_size=1, max_size=30),
        st.integers(1, 1000),
    )
    def test_active_is_linear(self, rows, c):
        conf, rec, dead = (np.array(col, dtype=np.int64) for col in zip(*rows))
        base = derive_active(panel(conf, rec, dead))
        scaled = derive_active(panel(conf * c, rec * c, dead * c))
        assert np.array_equal(scaled, base * c)


class TestScaling:
    def test_per_million(self):
        assert per_million([83], 83_000_000).tolist() == [1.0]
        assert per_million([0], 1000).tolist() == [0.0]
        with pytest.raises(MissingPopulation):
            per_million([1], None)

    def test_log_examples(self):
        np.testing.assert_allclose(log_transform([1, math.e, math.e**2]), [0, 1, 2], atol=1e-15)
        with pytest.raises(NonPositiveValue) as info:
            log_transform([0, 5], [D0, D0 + dt.timedelta(1)])
        assert "2020-03-18" in str(info.value)

    def test_geometric_series_is_linear(self):
        r = 1.07
        v = log_transform(3.0 * r ** np.arange(40))
        np.testing.assert_allclose(np.diff(v), math.log(r), rtol=1e-12)


class TestThreshold:
    def test_first_date_reaching(self):
        assert align_threshold(panel([40, 90, 120]), 100) == D0 + dt.timedelta(2)

    def test_never_reached(self):
        with pytest.raises(ThresholdNotReached):
            align_threshold(panel([0, 0, 0]), 100)

    def test_turkey_explicit_start(self, turkey_panel):
        assert align_threshold(turkey_panel, 100, TURKEY_START) == TURKEY_START
        # 98 cases on the pinned start, so the plain rule lands a day later
        assert align_threshold(turkey_panel, 100) == dt.date(2020, 3, 19)

    def test_explicit_start_outside_data(self):
        with pytest.raises(DataError):
            align_threshold(panel([1, 2, 3]), 100, dt.date(2019, 1, 1))

    @settings(max_examples=50)
    @given(st.lists(st.integers(0, 500), min_size=1, max_size=30), st.integers(0, 500), st.integers(0, 500))
    def test_monotone_in_threshold(self, daily, t1, t2):
        p = panel(list(np.cumsum(daily)))
        lo, hi = sorted((t1, t2))
        try:
            late = align_threshold(p, hi)
        except ThresholdNotReached:
            return
        assert align_threshold(p, lo) <= late


class TestSelectSeries:
    def test_daily_series_dated_from_second_row(self):
        p = panel([100, 110, 125, 140, 160], deaths=[0, 1, 1, 2, 4])
        ts = select_series(p, SeriesSelector("daily-deaths"), threshold=100)
        assert ts.origin_date == D0 + dt.timedelta(1)
        assert ts.values.tolist() == [1, 0, 1, 2]

    def test_log_per_million(self):
        p = panel([100, 200, 400, 800], population=1_000_000)
        ts = select_series(p, SeriesSelector("active", per_million=True, log=True))
        np.testing.assert_allclose(np.diff(ts.values), math.log(2), rtol=1e-12)

    def test_window_too_short(self):
        with pytest.raises(DataError):
            select_series(panel([1, 50, 100, 200]), SeriesSelector("active"), threshold=100)

    def test_clamp_negative(self):
        p = panel([100, 120, 118, 130])
        ts = select_series(p, SeriesSelector("daily-cases"), threshold=0, clamp_negative=True)
        assert ts.values.tolist() == [20, 0, 12]

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            SeriesSelector("hospitalised")
