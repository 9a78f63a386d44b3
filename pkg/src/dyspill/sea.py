"""Superposed epoch analysis with a randomised-event bootstrap null."""

from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .conflict import conflict_midpoint
from .errors import DataError

logger = logging.getLogger(__name__)

__all__ = ["EpochSpec", "SeaResult", "superposed_epoch", "event_sets", "sea_rows", "WAR_PERIODS"]

LEVELS = (0.10, 0.05, 0.01)

# The four war periods (five conflicts) used as SEA events.
WAR_PERIODS = ((1618, 1648), (1688, 1697), (1700, 1721), (1701, 1714), (1756, 1762))


@dataclass(frozen=True)
class EpochSpec:
    events: tuple[int, ...]
    window: int = 5
    normalization: str = "standardize"
    n_boot: int = 10_000
    seed: int = 0
    two_sided: bool = True

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("epoch half-width must be at least 1")
        if self.n_boot < 100:
            raise ValueError("n_boot must be at least 100")
        if self.normalization not in ("standardize", "none"):
            raise ValueError(f"unknown epoch normalization {self.normalization!r}")
        object.__setattr__(self, "events", tuple(sorted(set(int(e) for e in self.events))))


@dataclass(frozen=True)
class SeaResult:
    lags: np.ndarray
    composite: np.ndarray
    bands: dict[float, tuple[np.ndarray, np.ndarray]]
    events_used: tuple[int, ...]
    events_dropped: tuple[int, ...]

    def significant(self, level: float = 0.05) -> np.ndarray:
        lo, hi = self.bands[level]
        return (self.composite > hi) | (self.composite < lo)


def _normalize(epochs: np.ndarray, how: str) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise standardisation; returns normalised rows and a validity mask."""
    if how == "none":
        return epochs, np.ones(len(epochs), dtype=bool)
    mu = epochs.mean(axis=1, keepdims=True)
    sd = epochs.std(axis=1, keepdims=True)
    ok = sd[:, 0] > 0
    out = np.zeros_like(epochs)
    out[ok] = (epochs[ok] - mu[ok]) / sd[ok]
    return out, ok


def superposed_epoch(years: Sequence[int] | Mapping[int, float], values=None, spec: EpochSpec | None = None) -> SeaResult:
    """Composite a year-indexed series around event years.

    Each epoch spans lags ``-w..+w`` and is standardised by its own mean and
    standard deviation. The null distribution draws ``len(events)`` distinct
    pseudo-event years uniformly from every year whose full epoch lies in the
    series and recomputes the composite ``n_boot`` times. Bands are the
    per-lag null quantiles at the 10/5/1% levels.

    Call as ``superposed_epoch(years, values, spec)`` or
    ``superposed_epoch({year: value}, spec=spec)``.
    """
    if spec is None:
        raise ValueError("an EpochSpec is required")
    if isinstance(years, Mapping):
        items = sorted((int(k), v) for k, v in years.items())
        yrs = np.array([k for k, _ in items])
        vals = np.array([np.nan if v is None else float(v) for _, v in items])
    else:
        yrs = np.asarray(years, dtype=int)
        vals = np.asarray(values, dtype=float)
    if len(yrs) != len(vals):
        raise ValueError("years and values differ in length")
    w = spec.window
    lags = np.arange(-w, w + 1)
    lookup = {int(y): float(v) for y, v in zip(yrs, vals)}

    def epoch(e: int):
        seg = [lookup.get(e + k, math.nan) for k in lags]
        return None if any(math.isnan(v) for v in seg) else seg

    candidates = [int(y) for y in yrs if epoch(int(y)) is not None]
    if not candidates:
        raise DataError(f"series too short for epochs of half-width {w}")
    all_epochs = np.array([epoch(y) for y in candidates])
    norm_all, ok_all = _normalize(all_epochs, spec.normalization)
    pos = {y: i for i, y in enumerate(candidates)}

    used, dropped = [], []
    for e in spec.events:
        if e not in pos:
            warnings.warn(f"event {e} too close to the series boundary; dropped", stacklevel=2)
            dropped.append(e)
        elif not ok_all[pos[e]]:
            warnings.warn(f"event {e} has a zero-variance epoch; dropped", stacklevel=2)
            dropped.append(e)
        else:
            used.append(e)
    if not used and not any(e in pos for e in spec.events):
        raise DataError("no usable events after boundary clipping")
    K = max(len(used), 1)
    if used:
        composite = norm_all[[pos[e] for e in used]].mean(axis=0)
    else:
        composite = np.zeros(len(lags))

    rng = np.random.default_rng(spec.seed)
    n_cand = len(candidates)
    if K > n_cand:
        raise DataError("more events than available epoch positions")
    keys = rng.random((spec.n_boot, n_cand))
    picks = np.argpartition(keys, K - 1, axis=1)[:, :K] if K < n_cand else np.tile(np.arange(n_cand), (spec.n_boot, 1))
    valid = ok_all[picks]
    sums = np.einsum("bk,bkl->bl", valid.astype(float), norm_all[picks])
    counts = valid.sum(axis=1, keepdims=True)
    null = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)

    bands = {}
    for lvl in LEVELS:
        if spec.two_sided:
            lo, hi = np.quantile(null, [lvl / 2, 1 - lvl / 2], axis=0)
        else:
            lo, hi = np.quantile(null, [lvl, 1 - lvl], axis=0)
        bands[lvl] = (lo, hi)
    return SeaResult(lags, composite, bands, tuple(used), tuple(dropped))


def event_sets(
    conflicts: Iterable[tuple[int, int]] = WAR_PERIODS,
    variant: str = "start",
    exclusions: Iterable[tuple[int, int]] = (),
) -> tuple[int, ...]:
    """Event years for one SEA variant.

    ``start``: first year of each conflict. ``full-period``: every year of
    every conflict minus the inclusive exclusion ranges. ``midpoint``: the
    rounded-up midpoint of each conflict.
    """
    conflicts = list(conflicts)
    exclusions = [tuple(e) for e in exclusions]
    if variant == "start":
        years = {s for s, _ in conflicts}
    elif variant in ("full-period", "full", "all"):
        years = {y for s, e in conflicts for y in range(s, e + 1)}
        years = {y for y in years if not any(lo <= y <= hi for lo, hi in exclusions)}
    elif variant == "midpoint":
        years = {conflict_midpoint(s, e) for s, e in conflicts}
    else:
        raise ValueError(f"unknown SEA variant {variant!r}")
    return tuple(sorted(years))


def sea_rows(result: SeaResult) -> str:
    """Plot-ready rows: lag, composite, the three band pairs, 5% flag."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["lag", "composite", "band10_lo", "band10_hi", "band05_lo", "band05_hi", "band01_lo", "band01_hi", "significant_at_05"]
    )
    sig = result.significant(0.05)
    for k, lag in enumerate(result.lags):
        row = [int(lag), repr(float(result.composite[k]))]
        for lvl in LEVELS:
            lo, hi = result.bands[lvl]
            row += [repr(float(lo[k])), repr(float(hi[k]))]
        row.append("true" if sig[k] else "false")
        w.writerow(row)
    return buf.getvalue()
