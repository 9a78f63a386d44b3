"""Year-indexed price panels: ingestion, cleaning transforms and correlation."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import warnings
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

__all__ = [
    "PricePanel",
    "load_panel",
    "write_panel",
    "winsorize",
    "first_difference",
    "pearson_correlation_matrix",
    "contiguous_blocks",
    "panel_from_columns",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PricePanel:
    """A T x N matrix of annual price levels, one column per location.

    Rows are calendar years in strictly increasing unit steps. ``lineage``
    records the transforms applied since ingestion, e.g.
    ``("raw", "winsorized(0.01)", "first-differenced")``.
    """

    years: np.ndarray
    locations: tuple[str, ...]
    values: np.ndarray
    lineage: tuple[str, ...] = ("raw",)

    def __post_init__(self):
        years = np.asarray(self.years, dtype=np.int64).ravel()
        values = np.asarray(self.values, dtype=float)
        locations = tuple(str(x) for x in self.locations)
        if values.ndim != 2:
            raise DataError(f"panel values must be 2-D, got shape {values.shape}")
        if values.shape != (len(years), len(locations)):
            raise DataError(
                f"values shape {values.shape} does not match "
                f"{len(years)} years x {len(locations)} locations"
            )
        if len(set(locations)) != len(locations):
            raise DataError("duplicate location labels")
        if len(years) > 1 and np.any(np.diff(years) != 1):
            raise DataError("years must increase in unit steps")
        if not np.all(np.isfinite(values)):
            raise DataError("panel contains non-finite values")
        if not self.lineage:
            raise DataError("lineage must not be empty")
        object.__setattr__(self, "years", _frozen(years))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "locations", locations)
        object.__setattr__(self, "lineage", tuple(self.lineage))

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    def column(self, location: str) -> np.ndarray:
        return self.values[:, self.locations.index(location)]

    def select(self, locations: Sequence[str]) -> "PricePanel":
        """Return a panel restricted (and reordered) to ``locations``."""
        idx = [self.locations.index(loc) for loc in locations]
        return PricePanel(self.years, tuple(locations), self.values[:, idx], self.lineage)

    def slice_years(self, first: int, last: int) -> "PricePanel":
        """Rows with ``first <= year <= last``."""
        mask = (self.years >= first) & (self.years <= last)
        return PricePanel(self.years[mask], self.locations, self.values[mask], self.lineage)

    def row_mean(self) -> dict[int, float]:
        """Cross-location mean level per year."""
        return {int(y): float(v) for y, v in zip(self.years, self.values.mean(axis=1))}


def contiguous_blocks(years: Sequence[int]) -> list[tuple[int, int]]:
    """Split a sorted year sequence into maximal unit-step runs ``(first, last)``."""
    blocks: list[tuple[int, int]] = []
    for y in years:
        if blocks and y == blocks[-1][1] + 1:
            blocks[-1] = (blocks[-1][0], y)
        else:
            blocks.append((y, y))
    return blocks


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def load_panel(
    source,
    *,
    year_column: str = "year",
    columns: Mapping[str, str] | None = None,
    delimiter: str = ",",
    policy: str = "strict",
) -> PricePanel:
    """Read a delimited-text price panel.

    Args:
        source: Path or open text stream. A header row is required.
        year_column: Name of the year column in the file.
        columns: Optional ``{file_column: location_label}`` map. When given,
            only the mapped columns are loaded, in map order. Otherwise every
            non-year column is a location.
        delimiter: Field separator.
        policy: ``"strict"`` raises on any year gap or missing cell;
            ``"lenient"`` keeps the longest contiguous block of complete rows
            (earliest block wins ties) and warns about what was dropped.

    Raises:
        DataError: missing year column, non-numeric cell, duplicate year, or a
            gap under the strict policy.
    """
    if policy not in ("strict", "lenient"):
        raise ValueError(f"unknown gap policy {policy!r}")
    fh, close = _open_text(source)
    try:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError("empty panel source") from None
        if year_column not in header:
            raise DataError(f"missing year column {year_column!r}")
        year_idx = header.index(year_column)
        if columns is None:
            col_idx = [i for i, h in enumerate(header) if i != year_idx]
            labels = [header[i] for i in col_idx]
        else:
            missing = [c for c in columns if c not in header]
            if missing:
                raise DataError(f"columns not found in header: {missing}")
            col_idx = [header.index(c) for c in columns]
            labels = list(columns.values())

        rows: dict[int, list[float]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"row {lineno}: expected {len(header)} fields, got {len(row)}")
            raw_year = row[year_idx].strip()
            try:
                year = int(raw_year)
            except ValueError:
                raise DataError(f"row {lineno}, column {year_column!r}: bad year {raw_year!r}") from None
            if year in rows:
                raise DataError(f"row {lineno}: duplicate year {year}")
            vals = []
            for i, label in zip(col_idx, labels):
                cell = row[i].strip()
                if cell == "":
                    vals.append(math.nan)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"row {lineno}, column {header[i]!r}: non-numeric cell {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"row {lineno}, column {header[i]!r}: non-finite cell {cell!r}")
                vals.append(v)
            rows[year] = vals
    finally:
        if close:
            fh.close()

    if not rows:
        raise DataError("panel source has no data rows")
    years = sorted(rows)
    incomplete = [y for y in years if any(math.isnan(v) for v in rows[y])]
    complete = [y for y in years if y not in set(incomplete)]
    blocks = contiguous_blocks(complete)
    problems = []
    if incomplete:
        problems.append(f"incomplete rows for years {incomplete}")
    if len(blocks) > 1:
        gaps = [(a[1] + 1, b[0] - 1) for a, b in zip(blocks, blocks[1:])]
        problems.append(f"year gaps {gaps}")
    if problems:
        msg = "; ".join(problems)
        if policy == "strict":
            raise DataError(f"panel not analysis-ready: {msg}")
        if not blocks:
            raise DataError(f"no complete rows: {msg}")
        first, last = max(blocks, key=lambda b: (b[1] - b[0], -b[0]))
        warnings.warn(f"{msg}; truncated to {first}-{last}", stacklevel=2)
        logger.warning("panel truncated to %d-%d (%s)", first, last, msg)
        years = list(range(first, last + 1))
    values = np.array([rows[y] for y in years], dtype=float)
    return PricePanel(np.array(years), tuple(labels), values)


def write_panel(panel: PricePanel, dest=None, *, year_column: str = "year", delimiter: str = ",") -> str:
    """Serialise ``panel`` in the same delimited format ``load_panel`` reads.

    Floats are written with ``repr`` so a reload is exact. Returns the text and
    also writes it to ``dest`` (path or stream) when given.
    """
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow([year_column, *panel.locations])
    for y, row in zip(panel.years, panel.values):
        w.writerow([int(y), *(repr(float(v)) for v in row)])
    text = buf.getvalue()
    if dest is not None:
        if isinstance(dest, (str, os.PathLike)):
            with open(dest, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            dest.write(text)
    return text


def winsorize(panel: PricePanel, p: float, *, method: str = "linear") -> PricePanel:
    """Clip each location column at its ``p`` and ``1 - p`` quantiles.

    ``method`` is passed to :func:`numpy.quantile`; the default ``"linear"``
    interpolates between order statistics (Hyndman-Fan type 7). Note that the
    interpolating estimators are not exactly idempotent; order-statistic
    estimators such as ``"inverted_cdf"`` are.
    """
    if not 0 < p < 0.5:
        raise ValueError(f"winsorization fraction must lie in (0, 0.5), got {p}")
    if panel.T < math.ceil(1 / p):
        warnings.warn(
            f"only {panel.T} observations per column; winsorizing at p={p} "
            f"needs at least {math.ceil(1 / p)} to clip anything meaningful",
            stacklevel=2,
        )
    lo = np.quantile(panel.values, p, axis=0, method=method)
    hi = np.quantile(panel.values, 1 - p, axis=0, method=method)
    clipped = np.clip(panel.values, lo, hi)
    return PricePanel(panel.years, panel.locations, clipped, panel.lineage + (f"winsorized({p:g})",))


def first_difference(panel: PricePanel) -> PricePanel:
    """Year-on-year changes; each row is labelled with the later year."""
    if panel.T < 2:
        raise ValueError("first difference needs at least two years")
    return PricePanel(
        panel.years[1:],
        panel.locations,
        np.diff(panel.values, axis=0),
        panel.lineage + ("first-differenced",),
    )


def pearson_correlation_matrix(panel: PricePanel) -> np.ndarray:
    """N x N Pearson correlation of the location columns."""
    x = panel.values - panel.values.mean(axis=0)
    ss = np.sqrt(np.einsum("ij,ij->j", x, x))
    flat = [loc for loc, s in zip(panel.locations, ss) if s == 0]
    if flat:
        raise DataError(f"zero-variance columns: {flat}")
    r = (x.T @ x) / np.outer(ss, ss)
    r = np.clip((r + r.T) / 2, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return r


def panel_from_columns(columns: Mapping[str, Iterable[float]], first_year: int) -> PricePanel:
    """Convenience constructor for in-memory data."""
    labels = tuple(columns)
    values = np.column_stack([np.asarray(list(columns[k]), dtype=float) for k in labels])
    return PricePanel(np.arange(first_year, first_year + values.shape[0]), labels, values)
