"""Augmented Dickey-Fuller unit-root test with tabulated critical values.

Critical values come from MacKinnon's (2010) response surfaces for a single
series, evaluated at the regression's effective sample size. The test reports
a bracket on the p-value rather than a point estimate.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DataError
from .panel import PricePanel

__all__ = [
    "AdfResult",
    "PValueBound",
    "adf_test",
    "adf_table",
    "critical_values",
    "format_adf_table",
]

# Response-surface coefficients (b0, b1, b2, b3) with
# cv(T) = b0 + b1/T + b2/T^2 + b3/T^3, for sizes 1%, 5%, 10%.
_TAU_SURFACE: dict[str, dict[float, tuple[float, float, float, float]]] = {
    "none": {
        0.01: (-2.56574, -2.2358, -3.627, 0.0),
        0.05: (-1.94100, -0.2686, -3.365, 31.223),
        0.10: (-1.61682, 0.2656, -2.714, 25.364),
    },
    "constant": {
        0.01: (-3.43035, -6.5393, -16.786, -79.433),
        0.05: (-2.86154, -2.8903, -4.234, -40.040),
        0.10: (-2.56677, -1.5384, -2.809, 0.0),
    },
    "constant+trend": {
        0.01: (-3.95877, -9.0531, -28.428, -134.155),
        0.05: (-3.41049, -4.3904, -9.036, -45.374),
        0.10: (-3.12705, -2.5856, -3.925, -22.380),
    },
}

_FORM_ALIASES = {"c": "constant", "ct": "constant+trend", "n": "none", "nc": "none"}

LEVELS = (0.01, 0.05, 0.10)


def _form(form: str) -> str:
    form = _FORM_ALIASES.get(form, form)
    if form not in _TAU_SURFACE:
        raise ValueError(f"unknown ADF regression form {form!r}")
    return form


def critical_values(nobs: int, form: str = "constant") -> dict[float, float]:
    """Finite-sample critical values at 1%, 5% and 10% for ``nobs`` observations."""
    surface = _TAU_SURFACE[_form(form)]
    t = float(nobs)
    return {lvl: b0 + b1 / t + b2 / t**2 + b3 / t**3 for lvl, (b0, b1, b2, b3) in surface.items()}


@dataclass(frozen=True)
class PValueBound:
    """p < upper, lower <= p < upper, or p >= lower."""

    kind: str  # "less-than" | "interval" | "greater-than"
    lower: float | None
    upper: float | None

    def __str__(self) -> str:
        if self.kind == "less-than":
            return f"<{self.upper:.2f}"
        if self.kind == "greater-than":
            return f">{self.lower:.2f}"
        return f"{self.lower:.2f}-{self.upper:.2f}"

    def rejects_at(self, alpha: float) -> bool:
        """True when the bracket guarantees p < alpha."""
        return self.upper is not None and self.upper <= alpha


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lag_order: int
    p_value_bound: PValueBound
    regression_form: str
    nobs: int
    critical_values: Mapping[float, float]


def _bracket(stat: float, cvs: Mapping[float, float]) -> PValueBound:
    # Critical values are increasing in the level: cv(1%) < cv(5%) < cv(10%).
    if stat < cvs[0.01]:
        return PValueBound("less-than", None, 0.01)
    if stat < cvs[0.05]:
        return PValueBound("interval", 0.01, 0.05)
    if stat < cvs[0.10]:
        return PValueBound("interval", 0.05, 0.10)
    return PValueBound("greater-than", 0.10, None)


def adf_test(series, lag_order: int = 10, form: str = "constant") -> AdfResult:
    """ADF t-test on the lagged level in
    ``dy_t = a [+ b t] + g y_{t-1} + sum_i c_i dy_{t-i} + e_t``.

    The regression uses the ``T - 1 - lag_order`` observations for which all
    lagged differences exist.
    """
    form = _form(form)
    y = np.asarray(series, dtype=float).ravel()
    if lag_order < 0:
        raise ValueError("lag_order must be nonnegative")
    if not np.all(np.isfinite(y)):
        raise DataError("series contains non-finite values")
    T = len(y)
    if T <= 2 * (lag_order + 2):
        raise DataError(f"series of length {T} too short for lag order {lag_order}")
    dy = np.diff(y)
    nobs = len(dy) - lag_order
    level = y[lag_order:-1]
    if form != "none":
        # the intercept absorbs the shift; centring keeps X well conditioned
        level = level - level.mean()
    cols = [level]
    cols += [dy[lag_order - i : len(dy) - i] for i in range(1, lag_order + 1)]
    if form != "none":
        cols.append(np.ones(nobs))
    if form == "constant+trend":
        cols.append(np.arange(1, nobs + 1, dtype=float))
    X = np.column_stack(cols)
    z = dy[lag_order:]
    k = X.shape[1]
    if nobs <= k:
        raise DataError("not enough observations for the ADF regression")
    scale = np.linalg.norm(X, axis=0)
    if np.any(scale == 0):
        raise DataError("degenerate ADF regression (constant regressor)")
    Q, R = np.linalg.qr(X / scale)
    if np.abs(np.diag(R)).min() < 1e-12 * np.abs(np.diag(R)).max():
        raise DataError("degenerate ADF regression (collinear regressors)")
    beta = np.linalg.solve(R, Q.T @ z) / scale
    resid = z - X @ beta
    s2 = resid @ resid / (nobs - k)
    r_inv = np.linalg.solve(R, np.eye(k))
    se = np.sqrt(s2 * (r_inv[0] @ r_inv[0])) / scale[0]
    if not se > 0:
        raise DataError("degenerate ADF regression (zero residual variance)")
    stat = float(beta[0] / se)
    cvs = critical_values(nobs, form)
    return AdfResult(stat, lag_order, _bracket(stat, cvs), form, nobs, cvs)


def adf_table(panel: PricePanel, lag_order: int = 10, form: str = "constant") -> list[tuple[str, AdfResult]]:
    """Run the test on every location column."""
    return [(loc, adf_test(panel.values[:, i], lag_order, form)) for i, loc in enumerate(panel.locations)]


def format_adf_table(rows, delimiter: str = ",") -> str:
    """Location, Statistic, p-value bound rows (plus the lag and sample size)."""
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(["Location", "Statistic", "p-value", "lag_order", "nobs", "form"])
    for loc, res in rows:
        w.writerow([loc, f"{res.statistic:.4f}", str(res.p_value_bound), res.lag_order, res.nobs, res.regression_form])
    return buf.getvalue()
