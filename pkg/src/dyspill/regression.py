"""Regressions of the spillover index on conflict fatalities.

OLS with Newey-West (Bartlett) HAC covariance, linear-programming quantile
regression with pairs-bootstrap standard errors, and a Pearson/spline
summary for scatter plots.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import optimize, sparse, stats

from .conflict import FatalitySeries
from .errors import DataError, NumericalError
from .panel import PricePanel

__all__ = [
    "RegressionDesign",
    "RegressionFit",
    "build_design",
    "cpi_control",
    "ols_fit",
    "newey_west_cov",
    "default_nw_lag",
    "ols_newey_west",
    "check_loss",
    "quantile_coefficients",
    "quantile_fit",
    "quantile_process",
    "ScatterSummary",
    "scatter_fit_summary",
    "rcs_basis",
    "significance_stars",
    "regression_table_csv",
    "regression_table_json",
    "quantile_rows_csv",
]


@dataclass(frozen=True)
class RegressionDesign:
    response: np.ndarray
    regressors: np.ndarray
    labels: tuple[str, ...]
    years: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.response, dtype=float).ravel()
        X = np.asarray(self.regressors, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] != y.shape[0] or len(self.labels) != X.shape[1]:
            raise DataError("design dimensions do not agree")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("design contains missing or non-finite cells")
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "regressors", X)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "years", np.asarray(self.years))

    @property
    def n(self) -> int:
        return self.response.shape[0]

    def subset(self, rows) -> "RegressionDesign":
        return RegressionDesign(self.response[rows], self.regressors[rows], self.labels, self.years[rows])


def _excluded(year: int, exclusions) -> bool:
    return any(lo <= year <= hi for lo, hi in exclusions)


def build_design(
    spillover: Mapping[int, float | None],
    fatalities: FatalitySeries | Mapping[int, float],
    cpi: Mapping[int, float] | None = None,
    exclusions: Iterable[tuple[int, int]] = (),
) -> RegressionDesign:
    """Rows ``(spillover_t; 1, log fatalities_t, cpi_t)`` on the common years.

    Years with zero fatalities, a missing spillover value, or inside one of
    the inclusive ``exclusions`` ranges are dropped. Pass ``cpi=None`` to
    leave out the price-level control.
    """
    fat = fatalities.as_dict() if isinstance(fatalities, FatalitySeries) else dict(fatalities)
    exclusions = [tuple(e) for e in exclusions]
    years = sorted(set(spillover) & set(fat) & (set(cpi) if cpi is not None else set(fat)))
    rows = []
    for y in years:
        s, f = spillover[y], fat[y]
        if s is None or (isinstance(s, float) and math.isnan(s)) or not f > 0:
            continue
        if _excluded(y, exclusions):
            continue
        row = [s, 1.0, math.log(f)]
        if cpi is not None:
            row.append(float(cpi[y]))
        rows.append((y, row))
    if not rows:
        raise DataError("regression design is empty after filtering")
    arr = np.array([r for _, r in rows])
    labels = ("Intercept", "log(Fatalities)") + (("CPI",) if cpi is not None else ())
    return RegressionDesign(arr[:, 0], arr[:, 1:], labels, np.array([y for y, _ in rows]))


def cpi_control(panel: PricePanel, mode: str = "year", window: int | None = None) -> dict[int, float]:
    """Cross-location mean price level per year.

    ``mode="year"`` uses the mean in year t; ``mode="window"`` averages that
    mean over the trailing ``window`` years ending at t.
    """
    means = panel.values.mean(axis=1)
    if mode == "year":
        return {int(y): float(v) for y, v in zip(panel.years, means)}
    if mode == "window":
        if not window or window < 1:
            raise ValueError("window mode needs a positive window length")
        c = np.concatenate([[0.0], np.cumsum(means)])
        return {
            int(panel.years[t]): float((c[t + 1] - c[t + 1 - window]) / window)
            for t in range(window - 1, panel.T)
        }
    raise ValueError(f"unknown CPI control mode {mode!r}")


def significance_stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


@dataclass(frozen=True)
class RegressionFit:
    """Coefficients with standard errors; ``method`` records how SEs were made."""

    method: str
    coefficients: np.ndarray
    std_errors: np.ndarray
    n: int
    labels: tuple[str, ...]
    cov: np.ndarray | None = None
    residuals: np.ndarray | None = field(default=None, repr=False)
    design: RegressionDesign | None = field(default=None, repr=False)
    options: dict = field(default_factory=dict)

    @property
    def pvalues(self) -> np.ndarray:
        df = max(self.n - len(self.coefficients), 1)
        t = self.coefficients / self.std_errors
        return 2 * stats.t.sf(np.abs(t), df)

    @property
    def stars(self) -> tuple[str, ...]:
        return tuple(significance_stars(p) for p in self.pvalues)


def _check_rank(X: np.ndarray):
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise NumericalError("design matrix is rank-deficient")


def ols_fit(design: RegressionDesign) -> RegressionFit:
    """Least squares with classical (homoskedastic) standard errors."""
    X, y = design.regressors, design.response
    n, k = X.shape
    _check_rank(X)
    if n <= k:
        raise NumericalError("more coefficients than observations")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    s2 = resid @ resid / (n - k)
    cov = s2 * np.linalg.inv(X.T @ X)
    return RegressionFit("OLS", beta, np.sqrt(np.diag(cov)), n, design.labels, cov, resid, design)


def default_nw_lag(n: int) -> int:
    """``floor(4 * (n / 100) ** (2 / 9))``."""
    return int(math.floor(4 * (n / 100) ** (2 / 9)))


def newey_west_cov(fit: RegressionFit, lag: int | None = None) -> np.ndarray:
    """Bartlett-kernel HAC sandwich ``(X'X)^-1 S (X'X)^-1``, no small-sample factor.

    With ``lag=0`` this is the White (HC0) estimator.
    """
    if fit.residuals is None or fit.design is None:
        raise ValueError("fit carries no residuals")
    X, u = fit.design.regressors, fit.residuals
    n = X.shape[0]
    L = default_nw_lag(n) if lag is None else int(lag)
    if L < 0 or L >= n:
        raise ValueError(f"Newey-West lag must lie in [0, n), got {L} with n={n}")
    Xu = X * u[:, None]
    S = Xu.T @ Xu
    for ell in range(1, L + 1):
        w = 1.0 - ell / (L + 1.0)
        G = Xu[ell:].T @ Xu[:-ell]
        S += w * (G + G.T)
    bread = np.linalg.inv(X.T @ X)
    cov = bread @ S @ bread
    return (cov + cov.T) / 2


def ols_newey_west(design: RegressionDesign, lag: int | None = None) -> RegressionFit:
    """OLS coefficients with Newey-West standard errors."""
    base = ols_fit(design)
    L = default_nw_lag(design.n) if lag is None else int(lag)
    cov = newey_west_cov(base, L)
    return RegressionFit(
        f"OLS+NeweyWest(lag {L})",
        base.coefficients,
        np.sqrt(np.diag(cov)),
        base.n,
        base.labels,
        cov,
        base.residuals,
        design,
        {"nw_lag": L},
    )


def check_loss(residuals, tau: float) -> float:
    """Sum of ``rho_tau(r) = r * (tau - 1{r < 0})``."""
    r = np.asarray(residuals, dtype=float)
    return float(np.sum(np.where(r >= 0, tau * r, (tau - 1.0) * r)))


def _polish(X: np.ndarray, y: np.ndarray, beta: np.ndarray, tau: float) -> np.ndarray:
    """Snap an LP solution onto the exact basic solution through k data points."""
    n, k = X.shape
    order = np.argsort(np.abs(y - X @ beta), kind="stable")
    rows: list[int] = []
    for i in order:
        if np.linalg.matrix_rank(X[rows + [i]]) == len(rows) + 1:
            rows.append(int(i))
            if len(rows) == k:
                break
    if len(rows) < k:
        return beta
    exact = np.linalg.solve(X[rows], y[rows])
    base = check_loss(y - X @ beta, tau)
    if check_loss(y - X @ exact, tau) <= base + 1e-9 * (1.0 + abs(base)):
        return exact
    return beta


def quantile_coefficients(X, y, tau: float) -> np.ndarray:
    """Minimise the check loss by linear programming (HiGHS).

    ``min tau * 1'u + (1 - tau) * 1'v  s.t.  X b + u - v = y,  u, v >= 0``.
    """
    if not 0 < tau < 1:
        raise ValueError(f"quantile level must lie in (0, 1), got {tau}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    c = np.concatenate([np.zeros(k), np.full(n, tau), np.full(n, 1.0 - tau)])
    eye = sparse.identity(n, format="csr")
    A = sparse.hstack([sparse.csr_matrix(X), eye, -eye], format="csr")
    bounds = [(None, None)] * k + [(0, None)] * (2 * n)
    res = optimize.linprog(c, A_eq=A, b_eq=y, bounds=bounds, method="highs")
    if res.status != 0:
        raise NumericalError(f"quantile LP failed: {res.message}")
    return _polish(X, y, res.x[:k], tau)


def _boot_one(args):
    X, y, tau, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    idx = rng.integers(0, len(y), len(y))
    return quantile_coefficients(X[idx], y[idx], tau)


def quantile_fit(
    design: RegressionDesign,
    tau: float,
    n_boot: int = 1000,
    seed: int = 0,
    *,
    workers: int = 1,
) -> RegressionFit:
    """Quantile regression with pairs-bootstrap standard errors.

    Replicate b resamples rows with a generator seeded from the b-th child of
    ``SeedSequence(seed)``, so results do not depend on ``workers``.
    """
    if not 0 < tau < 1:
        raise ValueError(f"quantile level must lie in (0, 1), got {tau}")
    if n_boot < 1:
        raise ValueError("n_boot must be at least 1")
    X, y = design.regressors, design.response
    _check_rank(X)
    beta = quantile_coefficients(X, y, tau)
    seeds = np.random.SeedSequence(seed).spawn(n_boot)
    jobs = [(X, y, tau, s) for s in seeds]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            draws = list(pool.map(_boot_one, jobs))
    else:
        draws = [_boot_one(j) for j in jobs]
    draws = np.array(draws)
    se = draws.std(axis=0, ddof=1) if n_boot > 1 else np.full(len(beta), np.nan)
    cov = np.cov(draws, rowvar=False) if n_boot > 1 else None
    return RegressionFit(
        f"Quantile(tau={tau:g}, bootstrap {n_boot})",
        beta,
        se,
        design.n,
        design.labels,
        cov,
        design.response - X @ beta,
        design,
        {"tau": tau, "n_boot": n_boot, "seed": seed},
    )


def quantile_process(
    design: RegressionDesign, taus: Sequence[float], n_boot: int = 1000, seed: int = 0, *, term: str = "log(Fatalities)", z: float = 1.96, workers: int = 1
) -> list[tuple[float, float, float, float]]:
    """``(tau, coefficient, lower, upper)`` for one term across quantile levels."""
    k = design.labels.index(term)
    rows = []
    for tau in taus:
        f = quantile_fit(design, tau, n_boot, seed, workers=workers)
        b, s = float(f.coefficients[k]), float(f.std_errors[k])
        rows.append((float(tau), b, b - z * s, b + z * s))
    return rows


def rcs_basis(x, knots) -> np.ndarray:
    """Restricted (natural) cubic spline basis: columns ``x, s_1..s_{k-2}``.

    Each nonlinear term is Harrell's truncated-power combination, scaled by
    ``(t_k - t_1)^2`` so it is on the scale of x. The fit is linear beyond the
    outer knots.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(knots, dtype=float)
    k = len(t)
    if k < 3:
        raise ValueError("restricted cubic spline needs at least 3 knots")
    scale = (t[-1] - t[0]) ** 2
    pos = lambda v: np.maximum(v, 0.0) ** 3  # noqa: E731
    cols = [x]
    for j in range(k - 2):
        s = (
            pos(x - t[j])
            - pos(x - t[-2]) * (t[-1] - t[j]) / (t[-1] - t[-2])
            + pos(x - t[-1]) * (t[-2] - t[j]) / (t[-1] - t[-2])
        )
        cols.append(s / scale)
    return np.column_stack(cols)


@dataclass(frozen=True)
class ScatterSummary:
    r: float
    p_value: float
    n: int
    mode: str
    coefficients: np.ndarray
    knots: np.ndarray | None
    grid: np.ndarray
    curve: np.ndarray

    def predict(self, x) -> np.ndarray:
        return _curve_basis(x, self.knots) @ self.coefficients


def _curve_basis(x, knots) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    body = x[:, None] if knots is None else rcs_basis(x, knots)
    return np.column_stack([np.ones(len(x)), body])


RCS_QUANTILES = (0.05, 0.35, 0.65, 0.95)


def scatter_fit_summary(x, y, mode: str = "linear", knots: int = 4, grid_points: int = 100) -> ScatterSummary:
    """Pearson r with its two-sided t-test p-value, plus a fitted curve.

    ``mode="rcs"`` fits a restricted cubic spline; with 4 knots they sit at the
    5/35/65/95th percentiles of x, otherwise at equally spaced quantiles
    between the 5th and 95th.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n != len(y):
        raise ValueError("x and y differ in length")
    if mode not in ("linear", "rcs"):
        raise ValueError(f"unknown fit mode {mode!r}")
    need = knots + 2 if mode == "rcs" else 3
    if n < need:
        raise DataError(f"need at least {need} points for a {mode} fit, got {n}")
    xc, yc = x - x.mean(), y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0:
        raise DataError("zero variance in x or y")
    r = float(np.clip(xc @ yc / denom, -1.0, 1.0))
    if abs(r) >= 1.0:
        p = 0.0
    else:
        tstat = r * math.sqrt((n - 2) / (1 - r * r))
        p = float(2 * stats.t.sf(abs(tstat), n - 2))
    kn = None
    if mode == "rcs":
        qs = RCS_QUANTILES if knots == 4 else np.linspace(0.05, 0.95, knots)
        kn = np.quantile(x, qs)
        if np.any(np.diff(kn) <= 0):
            raise DataError("spline knots are not distinct; too few unique x values")
    coef, *_ = np.linalg.lstsq(_curve_basis(x, kn), y, rcond=None)
    grid = np.linspace(x.min(), x.max(), grid_points)
    return ScatterSummary(r, p, n, mode, coef, kn, grid, _curve_basis(grid, kn) @ coef)


def _cell(b: float, se: float, star: str) -> str:
    return f"{b:.3f} ({se:.3f}){star}"


def regression_table_csv(fits: Mapping[str, RegressionFit], delimiter: str = ",") -> str:
    """Coefficient (SE) with stars per column, plus an N row."""
    names = list(fits)
    labels = fits[names[0]].labels
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(["", *names])
    for k, lab in enumerate(labels):
        w.writerow([lab, *(_cell(f.coefficients[k], f.std_errors[k], f.stars[k]) for f in fits.values())])
    w.writerow(["N", *(f.n for f in fits.values())])
    w.writerow(["SE", *(f.method for f in fits.values())])
    return buf.getvalue()


def regression_table_json(fits: Mapping[str, RegressionFit]) -> str:
    doc = {
        "format": "dyspill.regression-table",
        "version": 1,
        "columns": [
            {
                "name": name,
                "method": f.method,
                "n": f.n,
                "options": f.options,
                "terms": [
                    {
                        "label": lab,
                        "coefficient": float(f.coefficients[k]),
                        "std_error": float(f.std_errors[k]),
                        "p_value": float(f.pvalues[k]),
                        "stars": f.stars[k],
                    }
                    for k, lab in enumerate(f.labels)
                ],
            }
            for name, f in fits.items()
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def quantile_rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "coefficient", "lower", "upper"])
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
