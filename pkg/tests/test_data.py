import datetime as dt

import pytest
from hypothesis import given, strategies as st

from snowcast.data import (
    DailyRecord,
    Dataset,
    contiguous_windows,
    load_csv,
    season_day,
    write_csv,
)


def _days(start, values):
    return tuple(
        DailyRecord(start + dt.timedelta(days=i), t, r, s)
        for i, (t, r, s) in enumerate(values)
    )


class TestSeasonDay:
    def test_leap_year_end(self):
        assert season_day(dt.date(2000, 12, 31)) == 366

    def test_ordinary_year_end(self):
        assert season_day(dt.date(2001, 12, 31)) == 365

    def test_first_day(self):
        assert season_day(dt.date(2001, 1, 1)) == 1

    @given(st.dates(min_value=dt.date(1900, 1, 1), max_value=dt.date(2100, 12, 31)))
    def test_range(self, date):
        assert 1 <= season_day(date) <= 366

    def test_periodic_across_leap_years(self):
        # Dec 31 of consecutive leap years maps to the same ordinal.
        assert season_day(dt.date(2000, 12, 31)) == season_day(dt.date(2004, 12, 31))


class TestRecordsAndDataset:
    def test_negative_precip_rejected(self):
        with pytest.raises(ValueError):
            DailyRecord(dt.date(2000, 1, 1), 0.0, -1.0, 0.0)

    def test_negative_depth_rejected(self):
        with pytest.raises(ValueError):
            DailyRecord(dt.date(2000, 1, 1), 0.0, 0.0, -0.1)

    def test_nonconsecutive_dates_rejected(self):
        recs = (
            DailyRecord(dt.date(2000, 1, 1)),
            DailyRecord(dt.date(2000, 1, 3)),
        )
        with pytest.raises(ValueError):
            Dataset(records=recs)

    def test_min_length(self):
        with pytest.raises(ValueError):
            Dataset(records=(DailyRecord(dt.date(2000, 1, 1)),))


class TestLoadCsv:
    def test_three_rows(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text(
            "date,temp_c,precip_mm,snow_cm\n"
            "2000-01-01,-2.0,1.5,10.0\n"
            "2000-01-02,-1.0,0.0,9.5\n"
            "2000-01-03,0.5,,9.0\n"
        )
        data = load_csv(p)
        assert len(data) == 3
        assert data[2].precipitation is None
        assert data[0].snow_depth == 10.0

    def test_gap_filled(self, tmp_path):
        p = tmp_path / "b.csv"
        p.write_text(
            "date,temp_c,precip_mm,snow_cm\n"
            "2000-01-01,-2.0,1.5,10.0\n"
            "2000-01-03,0.5,0.0,9.0\n"
        )
        data = load_csv(p)
        assert len(data) == 3
        middle = data[1]
        assert middle.date == dt.date(2000, 1, 2)
        assert middle.temperature is None and middle.snow_depth is None

    def test_negative_precip_names_row(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text(
            "date,temp_c,precip_mm,snow_cm\n"
            "2000-01-01,-2.0,1.0,10.0\n"
            "2000-01-02,-1.0,-1.0,9.5\n"
        )
        with pytest.raises(ValueError, match="row 3"):
            load_csv(p)

    def test_malformed_date_names_row(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("date,temp_c,precip_mm,snow_cm\n01/02/2000,-2.0,1.0,10.0\n")
        with pytest.raises(ValueError, match="row 2"):
            load_csv(p)

    def test_non_numeric_field_names_row(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text(
            "date,temp_c,precip_mm,snow_cm\n"
            "2000-01-01,-2.0,1.0,10.0\n"
            "2000-01-02,cold,1.0,10.0\n"
        )
        with pytest.raises(ValueError, match="row 3"):
            load_csv(p)

    def test_crlf_accepted(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_bytes(
            b"date,temp_c,precip_mm,snow_cm\r\n"
            b"2000-01-01,-2.0,1.5,10.0\r\n"
            b"2000-01-02,-1.0,0.0,9.5\r\n"
        )
        assert len(load_csv(p)) == 2

    def test_round_trip_exact(self, tmp_path, small_station):
        p1 = tmp_path / "round1.csv"
        p2 = tmp_path / "round2.csv"
        write_csv(small_station, p1)
        loaded = load_csv(p1)
        assert [r.snow_depth for r in loaded] == [r.snow_depth for r in small_station]
        assert [r.temperature for r in loaded] == [r.temperature for r in small_station]
        write_csv(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestContiguousWindows:
    def _data(self, temps):
        recs = _days(dt.date(2000, 1, 1), [(t, 0.0, 0.0) for t in temps])
        return Dataset(records=recs)

    def test_complete_run(self):
        data = self._data([1.0] * 10)
        assert contiguous_windows(data, ("temperature",), min_lag=2) == [(0, 10)]

    def test_split_on_missing(self):
        data = self._data([1.0] * 4 + [None] + [1.0] * 5)
        assert contiguous_windows(data, ("temperature",)) == [(0, 4), (5, 10)]

    def test_all_missing(self):
        recs = _days(dt.date(2000, 1, 1), [(1.0, 0.0, None)] * 5)
        data = Dataset(records=recs)
        assert contiguous_windows(data, ("snow_depth",)) == []

    def test_short_runs_dropped(self):
        data = self._data([1.0, 1.0, None, 1.0] + [1.0] * 3)
        assert contiguous_windows(data, ("temperature",), min_lag=3) == [(3, 7)]

    @given(
        st.lists(st.booleans(), min_size=2, max_size=60),
    )
    def test_union_covers_every_present_index(self, pattern):
        recs = _days(
            dt.date(2000, 1, 1),
            [(1.0 if p else None, 0.0, 0.0) for p in pattern],
        )
        data = Dataset(records=recs)
        windows = contiguous_windows(data, ("temperature",), min_lag=0)
        covered = set()
        last_stop = 0
        for a, b in windows:
            assert a < b
            assert a >= last_stop  # sorted, disjoint
            last_stop = b
            covered.update(range(a, b))
        expected = {i for i, p in enumerate(pattern) if p}
        assert covered == expected
