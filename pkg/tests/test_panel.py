import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dyspill.errors import DataError
from dyspill.fixtures import synthetic_panel
from dyspill.panel import (
    PricePanel,
    contiguous_blocks,
    first_difference,
    load_panel,
    panel_from_columns,
    pearson_correlation_matrix,
    winsorize,
    write_panel,
)


def _csv(text):
    return io.StringIO(text)


class TestLoad:
    def test_basic(self):
        p = load_panel(_csv("year,A,B\n1600,1.0,2.0\n1601,1.5,2.5\n1602,2.0,3.5\n"))
        assert p.locations == ("A", "B")
        assert p.years.tolist() == [1600, 1601, 1602]
        assert p.values[2, 1] == 3.5
        assert p.lineage == ("raw",)

    def test_rows_sorted_by_year(self):
        p = load_panel(_csv("year,A\n1602,3\n1600,1\n1601,2\n"))
        assert p.values[:, 0].tolist() == [1.0, 2.0, 3.0]

    def test_column_map_and_delimiter(self):
        p = load_panel(_csv("yr;x;y;z\n1;1;2;3\n2;4;5;6\n"), year_column="yr", columns={"z": "Zed", "x": "Ex"}, delimiter=";")
        assert p.locations == ("Zed", "Ex")
        assert p.values.tolist() == [[3.0, 1.0], [6.0, 4.0]]

    def test_missing_year_column(self):
        with pytest.raises(DataError, match="year column"):
            load_panel(_csv("date,A\n1600,1\n"))

    def test_non_numeric_cell_names_row_and_column(self):
        with pytest.raises(DataError, match=r"row 3, column 'B'"):
            load_panel(_csv("year,A,B\n1600,1,2\n1601,1,abc\n"))

    def test_duplicate_year(self):
        with pytest.raises(DataError, match="duplicate year 1600"):
            load_panel(_csv("year,A\n1600,1\n1600,2\n"))

    def test_strict_gap(self):
        with pytest.raises(DataError, match="gaps"):
            load_panel(_csv("year,A\n1600,1\n1601,2\n1603,3\n"))

    def test_strict_missing_cell(self):
        with pytest.raises(DataError, match="incomplete"):
            load_panel(_csv("year,A,B\n1600,1,2\n1601,,2\n1602,1,2\n"))

    def test_lenient_keeps_longest_block(self):
        text = "year,A\n1600,1\n1601,2\n1603,3\n1604,4\n1605,5\n"
        with pytest.warns(UserWarning, match="truncated to 1603-1605"):
            p = load_panel(_csv(text), policy="lenient")
        assert p.years.tolist() == [1603, 1604, 1605]

    def test_lenient_tie_prefers_earliest(self):
        text = "year,A\n1600,1\n1601,2\n1603,3\n1604,4\n"
        with pytest.warns(UserWarning):
            p = load_panel(_csv(text), policy="lenient")
        assert p.years.tolist() == [1600, 1601]

    def test_lenient_missing_cell_splits_block(self):
        text = "year,A,B\n1600,1,1\n1601,1,\n1602,1,1\n1603,2,2\n1604,3,3\n"
        with pytest.warns(UserWarning):
            p = load_panel(_csv(text), policy="lenient")
        assert p.years.tolist() == [1602, 1603, 1604]

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            load_panel(_csv("year,A\n1,1\n"), policy="sloppy")

    def test_round_trip_is_exact(self, tmp_path):
        p = synthetic_panel()
        path = tmp_path / "p.csv"
        write_panel(p, path)
        q = load_panel(path)
        assert np.array_equal(p.values, q.values)
        assert np.array_equal(p.years, q.years)
        assert write_panel(q) == path.read_text()


class TestPanelType:
    def test_values_read_only(self):
        p = panel_from_columns({"A": [1, 2, 3]}, 1600)
        with pytest.raises(ValueError):
            p.values[0, 0] = 9

    def test_rejects_non_unit_steps(self):
        with pytest.raises(DataError):
            PricePanel(np.array([1600, 1602]), ("A",), np.ones((2, 1)))

    def test_rejects_duplicate_labels(self):
        with pytest.raises(DataError):
            PricePanel(np.array([1, 2]), ("A", "A"), np.ones((2, 2)))

    def test_rejects_nan(self):
        with pytest.raises(DataError):
            PricePanel(np.array([1, 2]), ("A",), np.array([[1.0], [np.nan]]))

    def test_select_and_slice(self):
        p = panel_from_columns({"A": [1, 2, 3, 4], "B": [5, 6, 7, 8]}, 1700)
        assert p.select(["B"]).values[:, 0].tolist() == [5, 6, 7, 8]
        assert p.slice_years(1701, 1702).values.tolist() == [[2, 6], [3, 7]]


def test_contiguous_blocks():
    assert contiguous_blocks([1, 2, 3, 5, 6, 9]) == [(1, 3), (5, 6), (9, 9)]
    assert contiguous_blocks([]) == []


class TestWinsorize:
    def test_one_to_hundred(self):
        # type-7 quantiles of 1..100 at 0.01 and 0.99: 1 + 0.01 * 99 and 100 - 0.01 * 99
        p = panel_from_columns({"A": np.arange(1.0, 101.0)}, 1600)
        w = winsorize(p, 0.01)
        col = w.values[:, 0]
        assert col[0] == pytest.approx(1.99, abs=1e-12)
        assert col[-1] == pytest.approx(99.01, abs=1e-12)
        assert np.array_equal(col[1:-1], np.arange(2.0, 100.0))
        assert w.lineage == ("raw", "winsorized(0.01)")

    def test_bounds_checked(self):
        p = panel_from_columns({"A": np.arange(10.0)}, 1)
        for bad in (0, 0.5, -0.1, 0.7):
            with pytest.raises(ValueError):
                winsorize(p, bad)

    def test_short_series_warns(self):
        p = panel_from_columns({"A": np.arange(20.0)}, 1)
        with pytest.warns(UserWarning, match="needs at least 100"):
            winsorize(p, 0.01)

    @settings(max_examples=60, deadline=None)
    @given(
        arrays(np.float64, st.tuples(st.integers(5, 60), st.integers(1, 4)), elements=st.floats(-1e6, 1e6)),
        st.sampled_from([0.01, 0.05, 0.1, 0.25]),
    )
    def test_order_statistic_method_is_idempotent(self, values, p):
        panel = PricePanel(np.arange(len(values)), tuple(f"c{i}" for i in range(values.shape[1])), values)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            once = winsorize(panel, p, method="inverted_cdf")
            twice = winsorize(once, p, method="inverted_cdf")
        assert np.array_equal(once.values, twice.values)

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(5, 60), st.integers(1, 3)), elements=st.floats(-1e6, 1e6)))
    def test_clipped_values_stay_in_range_and_order(self, values):
        panel = PricePanel(np.arange(len(values)), tuple(f"c{i}" for i in range(values.shape[1])), values)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            w = winsorize(panel, 0.05).values
        assert np.all(w.min(axis=0) >= values.min(axis=0))
        assert np.all(w.max(axis=0) <= values.max(axis=0))
        # clipping is monotone: it never reverses the order of two observations
        for j in range(values.shape[1]):
            o = np.argsort(values[:, j], kind="stable")
            assert np.all(np.diff(w[o, j]) >= 0)


def test_first_difference_labels_and_lineage():
    p = panel_from_columns({"A": [1.0, 4.0, 9.0]}, 1600)
    d = first_difference(p)
    assert d.years.tolist() == [1601, 1602]
    assert d.values[:, 0].tolist() == [3.0, 5.0]
    assert d.lineage[-1] == "first-differenced"
    with pytest.raises(ValueError):
        first_difference(panel_from_columns({"A": [1.0]}, 1600))


class TestCorrelation:
    def test_matches_numpy(self, city_panel):
        r = pearson_correlation_matrix(city_panel)
        assert np.allclose(r, np.corrcoef(city_panel.values, rowvar=False), atol=1e-12)
        assert np.all(np.diag(r) == 1.0)
        assert np.array_equal(r, r.T)

    def test_zero_variance_column_named(self):
        p = panel_from_columns({"A": [1.0, 2.0, 3.0], "Flat": [2.0, 2.0, 2.0]}, 1)
        with pytest.raises(DataError, match="Flat"):
            pearson_correlation_matrix(p)

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(4, 30), st.integers(2, 5)), elements=st.floats(-100, 100)))
    def test_symmetric_unit_diagonal_bounded(self, values):
        if np.any(values.std(axis=0) < 1e-6):
            return
        p = PricePanel(np.arange(len(values)), tuple(f"c{i}" for i in range(values.shape[1])), values)
        r = pearson_correlation_matrix(p)
        assert np.array_equal(r, r.T)
        assert np.all(np.diag(r) == 1.0)
        assert np.all(np.abs(r) <= 1.0)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 50), st.integers(1, 3)), elements=st.floats(-1e3, 1e3)))
def test_difference_inverts_cumulative_sum(steps):
    levels = np.cumsum(steps, axis=0)
    p = PricePanel(np.arange(len(levels)), tuple(f"c{i}" for i in range(levels.shape[1])), levels)
    d = first_difference(p).values
    scale = np.maximum(np.abs(levels[1:]), 1.0)
    assert np.all(np.abs(d - steps[1:]) <= 1e-12 * scale)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 8), st.integers(3, 40))
def test_correlation_psd(seed, N, T):
    values = np.random.default_rng(seed).standard_normal((T, N))
    p = PricePanel(np.arange(T), tuple(f"c{i}" for i in range(N)), values)
    assert np.linalg.eigvalsh(pearson_correlation_matrix(p)).min() >= -1e-10
