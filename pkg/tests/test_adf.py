import numpy as np
import pytest
from statsmodels.tsa.stattools import adfuller

from dyspill.adf import PValueBound, adf_table, adf_test, critical_values, format_adf_table
from dyspill.errors import DataError
from dyspill.fixtures import synthetic_panel
from dyspill.panel import first_difference

SM_FORM = {"constant": "c", "constant+trend": "ct", "none": "n"}


@pytest.mark.parametrize("form", ["constant", "constant+trend", "none"])
@pytest.mark.parametrize("lag", [0, 3, 10])
def test_statistic_and_critical_values_match_statsmodels(form, lag):
    rng = np.random.default_rng(lag * 7 + len(form))
    y = np.cumsum(rng.standard_normal(150)) * 0.3 + rng.standard_normal(150)
    res = adf_test(y, lag, form)
    stat, _, usedlag, nobs, crit = adfuller(y, maxlag=lag, autolag=None, regression=SM_FORM[form])[:5]
    assert usedlag == lag
    assert res.nobs == nobs
    assert res.statistic == pytest.approx(stat, rel=1e-10, abs=1e-10)
    for lvl, key in ((0.01, "1%"), (0.05, "5%"), (0.10, "10%")):
        assert res.critical_values[lvl] == pytest.approx(crit[key], abs=1e-9)


def test_asymptotic_critical_values():
    # large-sample limits of the constant-only surface
    cv = critical_values(10**9, "constant")
    assert cv[0.01] == pytest.approx(-3.43035, abs=1e-6)
    assert cv[0.05] == pytest.approx(-2.86154, abs=1e-6)
    assert cv[0.10] == pytest.approx(-2.56677, abs=1e-6)


def test_form_aliases_and_unknown():
    assert critical_values(100, "c") == critical_values(100, "constant")
    with pytest.raises(ValueError):
        critical_values(100, "quadratic")


def test_white_noise_rejects_random_walk_does_not():
    rng = np.random.default_rng(3)
    e = rng.standard_normal(400)
    wn = adf_test(e)
    rw = adf_test(np.cumsum(e))
    assert wn.p_value_bound.kind == "less-than"
    assert wn.p_value_bound.rejects_at(0.01)
    assert not rw.p_value_bound.rejects_at(0.05)


def test_bracket_strings():
    assert str(PValueBound("less-than", None, 0.01)) == "<0.01"
    assert str(PValueBound("interval", 0.01, 0.05)) == "0.01-0.05"
    assert str(PValueBound("greater-than", 0.10, None)) == ">0.10"
    assert PValueBound("interval", 0.05, 0.10).rejects_at(0.10)
    assert not PValueBound("interval", 0.05, 0.10).rejects_at(0.05)
    assert not PValueBound("greater-than", 0.10, None).rejects_at(0.5)


def test_bracket_consistent_with_critical_values():
    rng = np.random.default_rng(11)
    for _ in range(50):
        y = np.cumsum(rng.standard_normal(120)) * rng.uniform(0, 1) + rng.standard_normal(120)
        r = adf_test(y, 4)
        cv = r.critical_values
        assert r.p_value_bound.rejects_at(0.05) == (r.statistic < cv[0.05])
        assert r.p_value_bound.rejects_at(0.01) == (r.statistic < cv[0.01])


def test_too_short_and_non_finite():
    with pytest.raises(DataError, match="too short"):
        adf_test(np.arange(20.0), 10)
    with pytest.raises(DataError):
        adf_test(np.array([1.0, np.nan] * 30), 1)
    with pytest.raises(ValueError):
        adf_test(np.arange(50.0), -1)


def test_table_rows_per_location():
    d = first_difference(synthetic_panel())
    rows = adf_table(d, 10)
    assert [r[0] for r in rows] == list(d.locations)
    text = format_adf_table(rows)
    header, *body = text.strip().splitlines()
    assert header == "Location,Statistic,p-value,lag_order,nobs,form"
    assert len(body) == d.N
    assert all(line.split(",")[3] == "10" for line in body)


def test_affine_invariance():
    from hypothesis import given, settings
    from hypothesis import strategies as st

    y = np.cumsum(np.random.default_rng(8).standard_normal(200)) * 0.2 + np.random.default_rng(9).standard_normal(200)
    base = adf_test(y).statistic

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e-3, 1e3), st.floats(-1e4, 1e4))
    def check(a, b):
        assert abs(adf_test(a * y + b).statistic - base) < 1e-8

    check()


def test_random_walk_mostly_above_ten_percent():
    rng = np.random.default_rng(21)
    hits = sum(adf_test(np.cumsum(rng.standard_normal(200))).p_value_bound.kind == "greater-than" for _ in range(400))
    assert hits / 400 >= 0.85


def test_differenced_random_walk_rejects_at_one_percent():
    rw = np.cumsum(np.random.default_rng(22).standard_normal(201))
    assert adf_test(np.diff(rw)).p_value_bound.rejects_at(0.01)
