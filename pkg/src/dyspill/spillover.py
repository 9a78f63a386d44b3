"""Forecast-error variance decompositions and Diebold-Yilmaz spillover indices.

Orientation convention used throughout: ``d[i, j]`` is the share of the
H-step forecast-error variance of *target* j that is attributable to shocks
in *source* i. Rows are sources, columns are targets, so column sums of a
normalised matrix are 1, "to others" are off-diagonal row sums and "from
others" are off-diagonal column sums.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, InfeasibleWindowError, NumericalError, RankDeficiencyError
from .panel import PricePanel
from .var import VarModel, fit_var, ma_coefficients, min_observations

logger = logging.getLogger(__name__)

__all__ = [
    "FevdMatrix",
    "SpilloverTable",
    "RollingSpillover",
    "AveragedSpillover",
    "fevd",
    "normalize_rows_to_target",
    "spillover_table",
    "net_pairwise",
    "check_window",
    "rolling_spillover",
    "average_over_windows",
    "table_to_csv",
    "table_to_json",
    "table_from_json",
    "index_rows",
]

METHODS = ("generalized", "cholesky")


@dataclass(frozen=True)
class FevdMatrix:
    """N x N variance shares; ``d[source, target]``."""

    d: np.ndarray
    H: int
    method: str
    normalized: bool
    locations: tuple[str, ...] = ()

    @property
    def N(self) -> int:
        return self.d.shape[0]


def fevd(model: VarModel, H: int = 10, method: str = "generalized", *, normalize: bool = True, literal: bool = False) -> FevdMatrix:
    """H-step forecast-error variance decomposition.

    ``method="cholesky"`` orthogonalises shocks with the lower Cholesky factor
    P of Sigma (ordering-dependent). ``method="generalized"`` uses the
    Koop-Pesaran-Potter-Shin generalised shares

        d[i, j] = Sigma_ii^-1 * sum_h (e_j' A_h Sigma e_i)^2 / sum_h (e_j' A_h Sigma A_h' e_j)

    where i is the shock variable and j the target. Generalised shares are
    rescaled so that each target's column sums to one unless ``normalize`` is
    False.

    ``literal=True`` evaluates the generalised formula with the index placement
    written the other way round (row index is the forecast variable, scale on
    its own error variance). It is only meant for auditing against that
    notation; its rows, not columns, are the decomposed variances.
    """
    if H < 1:
        raise ValueError("horizon must be at least 1")
    if method not in METHODS:
        raise ValueError(f"unknown FEVD method {method!r}")
    sigma = np.asarray(model.sigma, dtype=float)
    A = ma_coefficients(model, H)
    denom = np.einsum("hij,jk,hik->i", A, sigma, A)  # diag of sum_h A_h Sigma A_h'
    if np.any(denom <= 0):
        raise NumericalError("non-positive forecast-error variance")
    if method == "cholesky":
        try:
            P = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            raise NumericalError("residual covariance is not positive definite") from None
        theta = np.square(A @ P).sum(axis=0)  # [target, source]
        d = (theta / denom[:, None]).T
        return FevdMatrix(d, H, method, False, tuple(model.locations))

    var = np.diag(sigma)
    if np.any(var <= 0):
        raise NumericalError("zero residual variance")
    AS2 = np.square(A @ sigma).sum(axis=0)  # [target, shock] -> sum_h (A_h Sigma)[j, i]^2
    if literal:
        d = AS2 / var[:, None] / denom[:, None]
        return FevdMatrix(d, H, method, False, tuple(model.locations))
    d = (AS2 / var[None, :] / denom[:, None]).T
    out = FevdMatrix(d, H, method, False, tuple(model.locations))
    return normalize_rows_to_target(out) if normalize else out


def normalize_rows_to_target(d: FevdMatrix) -> FevdMatrix:
    """Divide each target's incoming shares by their sum (columns sum to 1)."""
    sums = d.d.sum(axis=0)
    if np.any(sums <= 0):
        bad = [d.locations[k] if d.locations else k for k in np.flatnonzero(sums <= 0)]
        raise NumericalError(f"targets with zero total share: {bad}")
    return FevdMatrix(d.d / sums[None, :], d.H, d.method, True, d.locations)


@dataclass(frozen=True)
class SpilloverTable:
    """FEVD shares in percentage points plus directional aggregates."""

    fevd: np.ndarray
    to_others: np.ndarray
    from_others: np.ndarray
    net: np.ndarray
    total: float
    locations: tuple[str, ...]
    H: int | None = None
    method: str | None = None

    @property
    def N(self) -> int:
        return self.fevd.shape[0]

    def index(self, label) -> int:
        return label if isinstance(label, (int, np.integer)) else self.locations.index(label)


def spillover_table(d: FevdMatrix | np.ndarray, locations: Sequence[str] | None = None) -> SpilloverTable:
    """Pairwise, inward, outward, net and total spillovers (x100).

    Accepts a FevdMatrix (Cholesky, or generalised with normalisation) or a
    raw share matrix whose columns already sum to one.
    """
    if isinstance(d, FevdMatrix):
        if d.method == "generalized" and not d.normalized:
            raise ValueError("generalised FEVD must be normalised before building a spillover table")
        shares, H, method = d.d, d.H, d.method
        labels = tuple(locations or d.locations)
    else:
        shares, H, method = np.asarray(d, dtype=float), None, None
        labels = tuple(locations) if locations is not None else ()
    N = shares.shape[0]
    if shares.shape != (N, N):
        raise ValueError("share matrix must be square")
    if not labels:
        labels = tuple(f"y{i + 1}" for i in range(N))
    pct = 100.0 * shares
    off = pct - np.diag(np.diag(pct))
    to_others = off.sum(axis=1)
    from_others = off.sum(axis=0)
    total = float(off.sum() / N)
    return SpilloverTable(pct, to_others, from_others, to_others - from_others, total, labels, H, method)


def net_pairwise(table: SpilloverTable, i, j) -> float:
    """Net spillover from i to j: ``d[i, j] - d[j, i]`` in percentage points."""
    a, b = table.index(i), table.index(j)
    if a == b:
        raise ValueError("net pairwise spillover needs two distinct locations")
    return float(table.fevd[a, b] - table.fevd[b, a])


def check_window(window: int, n_vars: int, p: int, available: int | None = None) -> None:
    """Raise InfeasibleWindowError if a VAR(p) on ``n_vars`` series cannot be
    fitted on ``window`` observations (or the window exceeds the sample)."""
    need = min_observations(n_vars, p)
    if window < need:
        raise InfeasibleWindowError(
            f"window of {window} observations is rank-deficient for VAR({p}) on "
            f"{n_vars} locations (curse of dimensionality: need at least {need})"
        )
    if available is not None and window > available:
        raise InfeasibleWindowError(f"window of {window} exceeds the {available} available observations")


@dataclass(frozen=True)
class RollingSpillover:
    """Per-terminal-year spillover tables; ``None`` marks a failed window."""

    window: int
    years: np.ndarray
    tables: tuple[SpilloverTable | None, ...]

    @property
    def index(self) -> np.ndarray:
        return np.array([np.nan if t is None else t.total for t in self.tables])

    def table_at(self, year: int) -> SpilloverTable | None:
        return self.tables[int(np.searchsorted(self.years, year))] if year in self.years else None

    def net_series(self) -> np.ndarray:
        """T x N matrix of net spillovers (NaN rows for failed windows)."""
        N = next(t.N for t in self.tables if t is not None)
        return np.array([np.full(N, np.nan) if t is None else t.net for t in self.tables])


def _window_table(values, labels, p, H, method, dof_adjust) -> SpilloverTable | None:
    try:
        model = fit_var(values, p, dof_adjust=dof_adjust)
        model = VarModel(model.intercept, model.phi, model.sigma, model.T_eff, labels, dof_adjust)
        return spillover_table(fevd(model, H, method))
    except (RankDeficiencyError, NumericalError) as exc:
        logger.warning("window fit failed: %s", exc)
        return None


def rolling_spillover(
    panel: PricePanel,
    window: int,
    p: int = 1,
    H: int = 10,
    method: str = "generalized",
    *,
    dof_adjust: bool = True,
    workers: int = 1,
) -> RollingSpillover:
    """Spillover table for every trailing window of ``window`` rows.

    Window k covers rows ``k..k+window-1`` and is labelled with its last year.
    Fits that fail numerically are kept as ``None`` entries.
    """
    check_window(window, panel.N, p, panel.T)
    starts = range(panel.T - window + 1)
    job = lambda s: _window_table(panel.values[s : s + window], panel.locations, p, H, method, dof_adjust)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            tables = tuple(pool.map(job, starts))
    else:
        tables = tuple(job(s) for s in starts)
    years = panel.years[window - 1 :].copy()
    return RollingSpillover(window, years, tables)


@dataclass(frozen=True)
class AveragedSpillover:
    years: np.ndarray
    index: np.ndarray
    n_windows: np.ndarray
    runs: dict[int, RollingSpillover]

    def as_dict(self) -> dict[int, float | None]:
        return {int(y): (None if math.isnan(v) else float(v)) for y, v in zip(self.years, self.index)}


def average_over_windows(
    panel: PricePanel,
    windows: Iterable[int],
    p: int = 1,
    H: int = 10,
    method: str = "generalized",
    *,
    dof_adjust: bool = True,
    workers: int = 1,
) -> AveragedSpillover:
    """Mean total-spillover index across several window lengths.

    For each terminal year the index is the mean over the windows that
    produced a value for that year; ``n_windows`` counts them.
    """
    windows = sorted(set(int(w) for w in windows))
    if not windows:
        raise ValueError("window set is empty")
    for w in windows:
        check_window(w, panel.N, p, panel.T)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            runs = dict(zip(windows, pool.map(lambda w: rolling_spillover(panel, w, p, H, method, dof_adjust=dof_adjust), windows)))
    else:
        runs = {w: rolling_spillover(panel, w, p, H, method, dof_adjust=dof_adjust) for w in windows}
    years = panel.years[windows[0] - 1 :].copy()
    stack = np.full((len(windows), len(years)), np.nan)
    for k, w in enumerate(windows):
        run = runs[w]
        offset = w - windows[0]
        stack[k, offset:] = run.index
    counts = np.sum(~np.isnan(stack), axis=0)
    sums = np.nansum(stack, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return AveragedSpillover(years, mean, counts, runs)


def _fmt(x: float) -> str:
    return repr(float(x))


def table_to_csv(table: SpilloverTable, delimiter: str = ",") -> str:
    """Spillover-table layout: N x N block, "To Others" column, "From Others"
    row, total in the corner."""
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(["", *table.locations, "To Others"])
    for i, loc in enumerate(table.locations):
        w.writerow([loc, *(_fmt(v) for v in table.fevd[i]), _fmt(table.to_others[i])])
    w.writerow(["From Others", *(_fmt(v) for v in table.from_others), _fmt(table.total)])
    w.writerow(["Net", *(_fmt(v) for v in table.net), ""])
    return buf.getvalue()


TABLE_FORMAT = "dyspill.spillover-table"


def table_to_json(table: SpilloverTable) -> str:
    doc = {
        "format": TABLE_FORMAT,
        "version": 1,
        "locations": list(table.locations),
        "H": table.H,
        "method": table.method,
        "fevd_pct": table.fevd.tolist(),
        "to_others": table.to_others.tolist(),
        "from_others": table.from_others.tolist(),
        "net": table.net.tolist(),
        "total": table.total,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def table_from_json(text: str) -> SpilloverTable:
    doc = json.loads(text)
    if doc.get("format") != TABLE_FORMAT:
        raise DataError("not a spillover-table document")
    return SpilloverTable(
        np.array(doc["fevd_pct"], dtype=float),
        np.array(doc["to_others"], dtype=float),
        np.array(doc["from_others"], dtype=float),
        np.array(doc["net"], dtype=float),
        float(doc["total"]),
        tuple(doc["locations"]),
        doc.get("H"),
        doc.get("method"),
    )


def index_rows(years, values, counts=None) -> str:
    """``year,value,n_windows`` rows; missing values are left empty."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["year", "value", "n_windows"])
    for k, (y, v) in enumerate(zip(years, values)):
        n = 1 if counts is None else int(counts[k])
        if counts is None and (v is None or (isinstance(v, float) and math.isnan(v))):
            n = 0
        w.writerow([int(y), "" if v is None or math.isnan(v) else _fmt(v), n])
    return buf.getvalue()
