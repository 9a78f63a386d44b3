import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyspill.conflict import ConflictEvent, conflict_midpoint, fatalities_per_year, filter_regions, parse_catalog
from dyspill.errors import DataError
from dyspill.fixtures import synthetic_catalog


def ev(start, end, deaths, region=3, ident="e"):
    return ConflictEvent(ident, "", region, start, end, deaths)


def test_worked_example():
    s = fatalities_per_year([ev(1600, 1603, 100)])
    assert s.as_dict() == {1600: 25.0, 1601: 25.0, 1602: 25.0, 1603: 25.0}


def test_overlaps_sum_and_gaps_are_zero():
    s = fatalities_per_year([ev(1600, 1601, 10), ev(1601, 1601, 5), ev(1605, 1605, 1)])
    assert s.as_dict() == {1600: 5.0, 1601: 10.0, 1602: 0.0, 1603: 0.0, 1604: 0.0, 1605: 1.0}


def test_explicit_year_range_clips():
    s = fatalities_per_year([ev(1600, 1609, 100)], years=(1605, 1612))
    assert s.years.tolist() == list(range(1605, 1613))
    assert s.values.sum() == 50.0


def test_midpoints_of_the_four_periods():
    periods = [(1618, 1648), (1688, 1697), (1700, 1721), (1701, 1714), (1756, 1762)]
    assert {conflict_midpoint(*p) for p in periods} == {1633, 1693, 1708, 1711, 1759}


@settings(max_examples=200)
@given(st.integers(1000, 2000), st.integers(0, 200))
def test_midpoint_is_ceiling(start, length):
    end = start + length
    import math

    assert conflict_midpoint(start, end) == math.ceil(start + (end - start) / 2)


def test_midpoint_rejects_reversed():
    with pytest.raises(ValueError):
        conflict_midpoint(1700, 1699)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(
        st.tuples(st.integers(1500, 1800), st.integers(0, 40), st.integers(0, 10**7)),
        min_size=1,
        max_size=30,
    )
)
def test_mass_conservation(rows):
    events = [ev(s, s + d, float(f)) for s, d, f in rows]
    s = fatalities_per_year(events)
    assert np.isclose(s.values.sum(), sum(e.fatalities for e in events), rtol=1e-12, atol=0)
    assert np.all(s.values >= 0)


class TestParse:
    def test_fixture_catalog(self):
        cat = parse_catalog(io.StringIO(synthetic_catalog()))
        assert len(cat.events) == 9
        assert cat.dropped_missing_fatalities == [11]
        assert {e.region_code for e in cat.events} == {2, 3, 4}
        assert len(filter_regions(cat.events, [3, 4])) == 8
        assert "1 rows dropped" in cat.report

    def test_thousands_separator_and_custom_schema(self):
        text = 'reg;from;to;deaths\n3;1600;1601;"1,000"\n'
        cat = parse_catalog(io.StringIO(text), {"region": "reg", "start": "from", "end": "to", "fatalities": "deaths"}, delimiter=";")
        assert cat.events[0].fatalities == 1000.0
        assert cat.events[0].id == "2"

    def test_missing_end_rejected(self):
        text = "region,start_year,end_year,fatalities\n3,1600,,50\n3,1600,1600,5\n"
        cat = parse_catalog(io.StringIO(text))
        assert cat.rejected_missing_end == [2]
        assert len(cat.events) == 1

    def test_malformed_year_names_row(self):
        text = "region,start_year,end_year,fatalities\n3,1600,1601,5\n3,16x0,1601,5\n"
        with pytest.raises(DataError, match="row 3"):
            parse_catalog(io.StringIO(text))

    def test_end_before_start(self):
        text = "region,start_year,end_year,fatalities\n3,1605,1601,5\n"
        with pytest.raises(DataError, match="row 2.*precedes"):
            parse_catalog(io.StringIO(text))

    def test_missing_column(self):
        with pytest.raises(DataError, match="fatalities"):
            parse_catalog(io.StringIO("region,start_year,end_year\n3,1,2\n"))

    def test_event_validation(self):
        with pytest.raises(DataError):
            ev(1600, 1599, 1)
        with pytest.raises(DataError):
            ev(1600, 1601, -1)
        assert ev(1600, 1603, 1).duration == 4


def test_empty_allocation_and_csv():
    with pytest.raises(ValueError):
        fatalities_per_year([])
    s = fatalities_per_year([ev(1600, 1601, 3)])
    assert s.to_csv().splitlines() == ["year,fatalities", "1600,1.5", "1601,1.5"]
