"""Conflict-catalog parsing and allocation of fatalities to calendar years."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import DataError

__all__ = [
    "ConflictEvent",
    "ParsedCatalog",
    "FatalitySeries",
    "DEFAULT_SCHEMA",
    "parse_catalog",
    "filter_regions",
    "fatalities_per_year",
    "conflict_midpoint",
]

# Logical field -> column header in the catalog file.
DEFAULT_SCHEMA = {
    "id": "id",
    "name": "name",
    "region": "region",
    "start": "start_year",
    "end": "end_year",
    "fatalities": "fatalities",
}


@dataclass(frozen=True)
class ConflictEvent:
    id: str
    name: str
    region_code: int
    start_year: int
    end_year: int
    fatalities: float

    def __post_init__(self):
        if self.end_year < self.start_year:
            raise DataError(f"event {self.id}: end year {self.end_year} before start year {self.start_year}")
        if not self.fatalities >= 0:
            raise DataError(f"event {self.id}: negative fatality count")

    @property
    def duration(self) -> int:
        return self.end_year - self.start_year + 1


@dataclass
class ParsedCatalog:
    events: list[ConflictEvent]
    dropped_missing_fatalities: list[int] = field(default_factory=list)
    rejected_missing_end: list[int] = field(default_factory=list)

    @property
    def report(self) -> str:
        return (
            f"{len(self.events)} events kept; "
            f"{len(self.dropped_missing_fatalities)} rows dropped for missing fatalities; "
            f"{len(self.rejected_missing_end)} rows rejected for missing end year"
        )


def _int(cell: str, lineno: int, col: str) -> int:
    try:
        v = float(cell)
    except ValueError:
        raise DataError(f"catalog row {lineno}, column {col!r}: malformed value {cell!r}") from None
    if not v.is_integer():
        raise DataError(f"catalog row {lineno}, column {col!r}: malformed year {cell!r}")
    return int(v)


def parse_catalog(source, schema: Mapping[str, str] | None = None, delimiter: str = ",") -> ParsedCatalog:
    """Read conflict events from delimited text.

    ``schema`` maps logical fields (id, name, region, start, end, fatalities)
    to column headers; ``id`` and ``name`` are optional. Rows with an empty
    fatality cell are dropped; rows with fatalities but no end year are
    rejected. Both are listed by line number on the result.
    """
    sch = dict(DEFAULT_SCHEMA)
    if schema:
        sch.update(schema)
    close = isinstance(source, (str, os.PathLike))
    fh = open(source, newline="", encoding="utf-8") if close else source
    try:
        reader = csv.DictReader(fh, delimiter=delimiter)
        header = reader.fieldnames or []
        for key in ("region", "start", "end", "fatalities"):
            if sch[key] not in header:
                raise DataError(f"catalog is missing column {sch[key]!r} for {key}")
        out = ParsedCatalog([])
        for lineno, row in enumerate(reader, start=2):
            get = lambda key: (row.get(sch[key]) or "").strip()  # noqa: E731
            fat = get("fatalities").replace(",", "")  # thousands separators in quoted cells
            if fat == "":
                out.dropped_missing_fatalities.append(lineno)
                continue
            if get("end") == "":
                out.rejected_missing_end.append(lineno)
                continue
            try:
                deaths = float(fat)
            except ValueError:
                raise DataError(f"catalog row {lineno}: malformed fatalities {fat!r}") from None
            start = _int(get("start"), lineno, sch["start"])
            end = _int(get("end"), lineno, sch["end"])
            if end < start:
                raise DataError(f"catalog row {lineno}: end year {end} precedes start year {start}")
            region = _int(get("region"), lineno, sch["region"])
            ident = get("id") if sch["id"] in header else str(lineno)
            name = get("name") if sch["name"] in header else ""
            out.events.append(ConflictEvent(ident or str(lineno), name, region, start, end, deaths))
        return out
    finally:
        if close:
            fh.close()


def filter_regions(events: Iterable[ConflictEvent], codes: Iterable[int]) -> list[ConflictEvent]:
    codes = set(codes)
    return [e for e in events if e.region_code in codes]


@dataclass(frozen=True)
class FatalitySeries:
    years: np.ndarray
    values: np.ndarray

    def as_dict(self) -> dict[int, float]:
        return {int(y): float(v) for y, v in zip(self.years, self.values)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["year", "fatalities"])
        for y, v in zip(self.years, self.values):
            w.writerow([int(y), repr(float(v))])
        return buf.getvalue()


def fatalities_per_year(events: Iterable[ConflictEvent], years: tuple[int, int] | None = None) -> FatalitySeries:
    """Spread each event's fatalities evenly over its years and sum by year.

    The output covers ``min(start)..max(end)`` (or the ``years`` range when
    given); years without fighting are explicit zeros.
    """
    events = list(events)
    if not events:
        raise ValueError("no events to allocate")
    first = min(e.start_year for e in events) if years is None else years[0]
    last = max(e.end_year for e in events) if years is None else years[1]
    span = np.arange(first, last + 1)
    parts: list[list[float]] = [[] for _ in span]
    for e in events:
        share = e.fatalities / e.duration
        for y in range(max(e.start_year, first), min(e.end_year, last) + 1):
            parts[y - first].append(share)
    values = np.array([math.fsum(p) for p in parts])
    return FatalitySeries(span, values)


def conflict_midpoint(start: int, end: int) -> int:
    """``ceil(start + (end - start) / 2)`` in exact integer arithmetic."""
    if end < start:
        raise ValueError(f"end year {end} precedes start year {start}")
    return start + (end - start + 1) // 2
