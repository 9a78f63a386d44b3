import numpy as np
import pytest
from statsmodels.tsa.api import VAR

from dyspill.errors import RankDeficiencyError
from dyspill.panel import panel_from_columns
from dyspill.var import (
    companion_matrix,
    dumps_model,
    fit_var,
    loads_model,
    ma_coefficients,
    min_observations,
    select_order,
    simulate_var,
    stability_check,
)

PHI2 = np.array([[[0.4, 0.1, 0.0], [0.0, 0.3, 0.2], [0.1, 0.0, 0.2]], [[0.1, 0.0, 0.0], [0.05, 0.1, 0.0], [0.0, 0.0, -0.1]]])
SIG = np.array([[1.0, 0.3, 0.1], [0.3, 1.0, 0.2], [0.1, 0.2, 0.5]])


@pytest.fixture(scope="module")
def sample():
    return simulate_var(PHI2, SIG, 300, np.random.default_rng(5))


@pytest.mark.parametrize("p", [1, 2, 3])
def test_fit_matches_statsmodels(sample, p):
    m = fit_var(sample, p)
    ref = VAR(sample).fit(p, trend="c")
    assert np.allclose(m.intercept, ref.intercept, atol=1e-10)
    assert np.allclose(m.phi, ref.coefs, atol=1e-10)
    assert np.allclose(m.sigma, ref.sigma_u, atol=1e-10)
    assert m.T_eff == ref.nobs
    assert np.allclose(m.residuals, ref.resid, atol=1e-10)


def test_ml_covariance_without_dof_adjustment(sample):
    m = fit_var(sample, 2, dof_adjust=False)
    ref = VAR(sample).fit(2, trend="c")
    assert np.allclose(m.sigma, ref.sigma_u_mle, atol=1e-10)


def test_no_intercept(sample):
    m = fit_var(sample, 1, intercept=False)
    ref = VAR(sample).fit(1, trend="n")
    assert np.allclose(m.phi, ref.coefs, atol=1e-10)
    assert np.all(m.intercept == 0)


def test_recovers_parameters_on_long_sample():
    y = simulate_var(PHI2, SIG, 20000, np.random.default_rng(1))
    m = fit_var(y, 2)
    assert np.allclose(m.phi, PHI2, atol=0.03)
    assert np.allclose(m.sigma, SIG, atol=0.04)


def test_aic_selection_matches_statsmodels(sample):
    ours = select_order(sample, 4, "aic")
    ref = VAR(sample).select_order(4, trend="c")
    assert ours.chosen == ref.selected_orders["aic"]
    assert ours.criterion == "AIC"
    # same scores up to the constant dropped from the log-likelihood
    diffs = [ours.scores[p] - ref.ics["aic"][p] for p in range(1, 5)]
    assert np.ptp(diffs) < 1e-9


@pytest.mark.parametrize("crit", ["bic", "hq"])
def test_selection_other_criteria(sample, crit):
    sel = select_order(sample, 4, crit)
    key = {"bic": "bic", "hq": "hqic"}[crit]
    ref = VAR(sample).select_order(4, trend="c")
    assert sel.chosen == ref.selected_orders[key]
    assert set(sel.scores) == {1, 2, 3, 4}


def test_selection_rejects_unknown_criterion(sample):
    with pytest.raises(ValueError):
        select_order(sample, 2, "fpe")


def test_min_observations_examples():
    assert min_observations(14, 1) == 30
    assert min_observations(3, 1) == 8
    assert min_observations(2, 2) == 9


def test_boundary_of_feasibility(rng):
    for N, p in [(2, 1), (3, 2), (5, 1)]:
        need = min_observations(N, p)
        ok = rng.standard_normal((need, N))
        fit_var(ok, p)
        with pytest.raises(RankDeficiencyError, match="curse of dimensionality"):
            fit_var(ok[:-1], p)


def test_fourteen_cities_thirty_five_years_order_two():
    y = np.random.default_rng(0).standard_normal((35, 14))
    with pytest.raises(RankDeficiencyError):
        fit_var(y, 2)


def test_collinear_regressors():
    y = np.random.default_rng(0).standard_normal((50, 2))
    y[:, 1] = 2 * y[:, 0]
    with pytest.raises(RankDeficiencyError):
        fit_var(y, 1)


def test_ma_coefficients_recursion():
    A = ma_coefficients(PHI2, 6)
    assert np.array_equal(A[0], np.eye(3))
    assert np.allclose(A[1], PHI2[0])
    assert np.allclose(A[2], PHI2[0] @ PHI2[0] + PHI2[1])
    # compare with powers of the companion matrix
    C = companion_matrix(PHI2)
    for h in range(6):
        assert np.allclose(A[h], np.linalg.matrix_power(C, h)[:3, :3], atol=1e-12)


def test_ma_coefficients_match_statsmodels(sample):
    ref = VAR(sample).fit(2)
    m = fit_var(sample, 2)
    assert np.allclose(ma_coefficients(m, 8), ref.ma_rep(7), atol=1e-12)


def test_stability():
    r, ok = stability_check(fit_var(simulate_var(PHI2, SIG, 500, np.random.default_rng(2)), 2))
    assert ok and r < 1
    r, ok = stability_check(np.array([[1.05, 0.0], [0.0, 0.2]]))
    assert not ok and r == pytest.approx(1.05)


def test_serialization_round_trip(sample):
    m = fit_var(panel_from_columns({"a": sample[:, 0], "b": sample[:, 1], "c": sample[:, 2]}, 1500), 2)
    back = loads_model(dumps_model(m))
    assert back.locations == ("a", "b", "c")
    assert np.array_equal(back.phi, m.phi)
    assert np.array_equal(back.sigma, m.sigma)
    assert np.array_equal(back.intercept, m.intercept)
    assert back.T_eff == m.T_eff
    assert dumps_model(back) == dumps_model(m)


def test_invalid_order():
    with pytest.raises(ValueError):
        fit_var(np.zeros((10, 2)), 0)
