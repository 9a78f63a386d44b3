"""VAR(p) estimation by equation-wise least squares and its MA(inf) form."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError, RankDeficiencyError
from .panel import PricePanel

__all__ = [
    "VarModel",
    "OrderSelection",
    "fit_var",
    "min_observations",
    "select_order",
    "ma_coefficients",
    "companion_matrix",
    "stability_check",
    "dumps_model",
    "loads_model",
    "simulate_var",
]

MODEL_FORMAT = "dyspill.var-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class VarModel:
    """Fitted VAR(p): ``y_t = c + Phi_1 y_{t-1} + ... + Phi_p y_{t-p} + e_t``.

    ``phi`` has shape (p, N, N); ``sigma`` is the residual covariance.
    """

    intercept: np.ndarray
    phi: np.ndarray
    sigma: np.ndarray
    T_eff: int
    locations: tuple[str, ...]
    dof_adjusted: bool = True
    residuals: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def p(self) -> int:
        return self.phi.shape[0]

    @property
    def N(self) -> int:
        return self.phi.shape[1]


@dataclass(frozen=True)
class OrderSelection:
    criterion: str
    scores: dict[int, float]
    chosen: int


def min_observations(n_vars: int, p: int) -> int:
    """Smallest panel length for which a VAR(p) has a full-rank residual covariance.

    Each equation spends ``N*p + 1`` degrees of freedom, and the N x N residual
    covariance needs at least N residual degrees of freedom left over.
    """
    return p + n_vars * p + 1 + n_vars


def _lagged(y: np.ndarray, p: int, start: int) -> tuple[np.ndarray, np.ndarray]:
    """Response rows ``start..T-1`` and regressors ``[1, y_{t-1}, ..., y_{t-p}]``."""
    T = y.shape[0]
    Y = y[start:]
    lags = [y[start - i : T - i] for i in range(1, p + 1)]
    X = np.column_stack([np.ones(T - start)] + lags)
    return Y, X


def _values(data) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(data, PricePanel):
        return data.values, data.locations
    y = np.asarray(data, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    return y, tuple(f"y{i + 1}" for i in range(y.shape[1]))


def _check_rank(X: np.ndarray, N: int, p: int):
    n, k = X.shape
    if n - k < N:
        raise RankDeficiencyError(
            f"curse of dimensionality: VAR({p}) on {N} series needs at least "
            f"{k + N} usable observations for a full-rank residual covariance, got {n}"
        )
    if np.linalg.matrix_rank(X) < k:
        raise RankDeficiencyError(f"rank-deficient regressor matrix for VAR({p}) on {N} series")


def fit_var(data, p: int = 1, *, dof_adjust: bool = True, intercept: bool = True, start: int | None = None) -> VarModel:
    """Least-squares VAR(p) fit.

    Args:
        data: PricePanel (usually differenced) or a T x N array.
        p: Lag order, at least 1.
        dof_adjust: Divide the residual cross-product by ``T_eff - N*p - 1``
            rather than ``T_eff``.
        intercept: Include a constant in every equation. When False the
            intercept column is dropped and the d.o.f. correction uses N*p.
        start: First response row (defaults to ``p``). Passing a larger value
            fits on a shortened common sample, as order selection does.

    Raises:
        RankDeficiencyError: too few observations or collinear regressors.
    """
    if p < 1:
        raise ValueError("VAR lag order must be at least 1")
    y, labels = _values(data)
    T, N = y.shape
    if not np.all(np.isfinite(y)):
        raise DataError("VAR input contains non-finite values")
    start = p if start is None else start
    if start < p:
        raise ValueError("start must be at least p")
    if T - start <= 0:
        raise RankDeficiencyError(f"curse of dimensionality: {T} observations cannot support VAR({p})")
    Y, X = _lagged(y, p, start)
    if not intercept:
        X = X[:, 1:]
    _check_rank(X, N, p)
    B, *_ = np.linalg.lstsq(X, Y, rcond=None)
    resid = Y - X @ B
    n, k = X.shape
    denom = n - k if dof_adjust else n
    sigma = resid.T @ resid / denom
    sigma = (sigma + sigma.T) / 2
    if intercept:
        c, coefs = B[0], B[1:]
    else:
        c, coefs = np.zeros(N), B
    # coefs rows are stacked lags; reshape (p*N, N) -> (p, N, N) and transpose to Phi_i
    phi = coefs.reshape(p, N, N).transpose(0, 2, 1)
    return VarModel(c.copy(), phi.copy(), sigma, n, labels, dof_adjust, resid)


_PENALTY = {
    "aic": lambda n: 2.0 / n,
    "bic": lambda n: math.log(n) / n,
    "hq": lambda n: 2.0 * math.log(math.log(n)) / n,
}


def select_order(data, p_max: int, criterion: str = "bic") -> OrderSelection:
    """Choose p in 1..p_max by an information criterion on a common sample.

    Every candidate is fitted on rows ``p_max..T-1`` so that the scores are
    comparable. Scores are ``log det(Sigma_ML) + penalty * p * N^2``; ties go
    to the smaller order.
    """
    if p_max < 1:
        raise ValueError("p_max must be at least 1")
    key = criterion.lower()
    if key not in _PENALTY:
        raise ValueError(f"unknown information criterion {criterion!r}")
    y, _ = _values(data)
    N = y.shape[1]
    scores: dict[int, float] = {}
    for p in range(1, p_max + 1):
        m = fit_var(y, p, dof_adjust=False, start=p_max)
        sign, logdet = np.linalg.slogdet(m.sigma)
        if sign <= 0:
            raise RankDeficiencyError(f"singular residual covariance at p={p}")
        scores[p] = float(logdet + _PENALTY[key](m.T_eff) * p * N * N)
    best = min(scores.values())
    chosen = min(p for p, s in scores.items() if s == best)
    return OrderSelection(key.upper(), scores, chosen)


def ma_coefficients(model_or_phi, H: int) -> np.ndarray:
    """MA matrices ``A_0..A_{H-1}`` with ``A_0 = I`` and
    ``A_h = Phi_1 A_{h-1} + ... + Phi_p A_{h-p}``.

    Returns an array of shape (H, N, N).
    """
    if H < 1:
        raise ValueError("horizon must be at least 1")
    phi = model_or_phi.phi if isinstance(model_or_phi, VarModel) else np.asarray(model_or_phi, dtype=float)
    if phi.ndim == 2:
        phi = phi[None]
    p, N, _ = phi.shape
    A = np.zeros((H, N, N))
    A[0] = np.eye(N)
    for h in range(1, H):
        for i in range(1, min(h, p) + 1):
            A[h] += phi[i - 1] @ A[h - i]
    return A


def companion_matrix(phi) -> np.ndarray:
    phi = phi.phi if isinstance(phi, VarModel) else np.asarray(phi, dtype=float)
    if phi.ndim == 2:
        phi = phi[None]
    p, N, _ = phi.shape
    C = np.zeros((N * p, N * p))
    C[:N] = np.hstack(list(phi))
    if p > 1:
        C[N:, :-N] = np.eye(N * (p - 1))
    return C


def stability_check(model) -> tuple[float, bool]:
    """Spectral radius of the companion matrix and whether the VAR is stable (< 1)."""
    radius = float(np.max(np.abs(np.linalg.eigvals(companion_matrix(model)))))
    return radius, radius < 1.0


def dumps_model(model: VarModel) -> str:
    """Versioned JSON document for a fitted model (matrices row-major)."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "locations": list(model.locations),
        "p": model.p,
        "T_eff": model.T_eff,
        "dof_adjusted": model.dof_adjusted,
        "intercept": model.intercept.tolist(),
        "phi": [m.tolist() for m in model.phi],
        "sigma": model.sigma.tolist(),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def loads_model(text: str) -> VarModel:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise DataError("not a VAR model document")
    if doc.get("version") != MODEL_VERSION:
        raise DataError(f"unsupported model document version {doc.get('version')}")
    return VarModel(
        np.array(doc["intercept"], dtype=float),
        np.array(doc["phi"], dtype=float).reshape(doc["p"], len(doc["locations"]), len(doc["locations"])),
        np.array(doc["sigma"], dtype=float),
        int(doc["T_eff"]),
        tuple(doc["locations"]),
        bool(doc["dof_adjusted"]),
    )


def simulate_var(phi: Sequence[np.ndarray] | np.ndarray, sigma, T: int, rng, *, intercept=None, burn: int = 200) -> np.ndarray:
    """Draw a T x N path from a Gaussian VAR(p); used by demos and tests."""
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 2:
        phi = phi[None]
    p, N, _ = phi.shape
    c = np.zeros(N) if intercept is None else np.asarray(intercept, dtype=float)
    L = np.linalg.cholesky(np.asarray(sigma, dtype=float))
    e = rng.standard_normal((T + burn, N)) @ L.T
    y = np.zeros((T + burn, N))
    for t in range(p, T + burn):
        y[t] = c + e[t]
        for i in range(p):
            y[t] += phi[i] @ y[t - 1 - i]
    return y[burn:]
