"""Run configuration: an INI-style key/value file plus command-line overrides.

Grammar (``#`` and ``;`` start comments; paths are relative to the file)::

    [data]
    panel = prices.csv            # year column + one column per location
    year_column = year
    delimiter = ,
    gap_policy = strict           # strict | lenient
    catalog = conflicts.csv       # optional
    catalog_columns = region=region, start=start_year, end=end_year, fatalities=fatalities
    regions = 3, 4
    coordinates = coords.csv      # optional: label, lat, lon

    [model]
    winsorize = 0.01              # or "off"
    order = 1                     # or auto(bic) / auto(aic) / auto(hq)
    order_max = 4
    horizon = 10
    method = generalized          # generalized | cholesky
    windows = 30-40               # ranges and comma lists: 30-35, 38, 40
    dof_adjust = true
    adf_lag = 10
    adf_form = constant           # constant | constant+trend | none

    [network]
    snapshot_years = 1617, 1622, 1710, 1757, 1762
    snapshot_window = 35
    retain = 0
    highlight = 10
    formats = json, graphml, dot

    [regression]
    exclusions = 1628-1648
    nw_lag = auto
    quantiles = 0.25, 0.5, 0.75, 0.9
    n_boot = 1000
    cpi_control = year            # year | window

    [sea]
    conflicts = 1618-1648, 1688-1697, 1700-1721, 1701-1714, 1756-1762
    variants = start, full-period, midpoint
    exclusions = 1628-1648
    window = 5
    n_boot = 10000
    two_sided = true

    [run]
    seed = 0
    output = run
    workers = 1
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError
from .spillover import check_window

__all__ = ["RunConfig", "load_config", "parse_windows", "parse_ranges", "apply_overrides"]

_AUTO = re.compile(r"^auto(?:\((aic|bic|hq)\))?$", re.I)


def parse_windows(text: str) -> tuple[int, ...]:
    """``"30-40"`` or ``"30, 35-37"`` -> sorted unique window lengths."""
    out: set[int] = set()
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        m = re.fullmatch(r"(\d+)\s*(?:-|\.\.)\s*(\d+)|(\d+)", part)
        if not m:
            raise ConfigError(f"bad window spec {part!r}")
        if m.group(3):
            out.add(int(m.group(3)))
            continue
        a, b = int(m.group(1)), int(m.group(2))
        if b < a:
            raise ConfigError(f"window range {part!r} ends before it starts")
        out.update(range(a, b + 1))
    if not out or min(out) < 1:
        raise ConfigError(f"window set {text!r} is empty or contains a non-positive length")
    return tuple(sorted(out))


def parse_ranges(text: str) -> tuple[tuple[int, int], ...]:
    """``"1628-1648, 1700"`` -> ((1628, 1648), (1700, 1700))."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part or part.lower() == "none":
            continue
        m = re.fullmatch(r"(-?\d+)\s*(?:-|\.\.)\s*(-?\d+)|(-?\d+)", part)
        if not m:
            raise ConfigError(f"bad year range {part!r}")
        if m.group(3):
            y = int(m.group(3))
            out.append((y, y))
        else:
            a, b = int(m.group(1)), int(m.group(2))
            if b < a:
                raise ConfigError(f"year range {part!r} ends before it starts")
            out.append((a, b))
    return tuple(out)


def _list(text: str, cast=str) -> tuple:
    try:
        return tuple(cast(x.strip()) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {text!r}")


@dataclass(frozen=True)
class RunConfig:
    panel: str | None = None
    year_column: str = "year"
    delimiter: str = ","
    gap_policy: str = "strict"
    catalog: str | None = None
    catalog_columns: tuple[tuple[str, str], ...] = ()
    regions: tuple[int, ...] = (3, 4)
    coordinates: str | None = None

    winsorize: float | None = 0.01
    order: str = "1"
    order_max: int = 4
    horizon: int = 10
    method: str = "generalized"
    windows: tuple[int, ...] = tuple(range(30, 41))
    dof_adjust: bool = True
    adf_lag: int = 10
    adf_form: str = "constant"

    snapshot_years: tuple[int, ...] = (1617, 1622, 1710, 1757, 1762)
    snapshot_window: int | None = None
    retain: float = 0.0
    highlight: float = 10.0
    formats: tuple[str, ...] = ("json", "graphml", "dot")

    exclusions: tuple[tuple[int, int], ...] = ((1628, 1648),)
    nw_lag: int | None = None
    quantiles: tuple[float, ...] = (0.25, 0.5, 0.75, 0.9)
    n_boot: int = 1000
    cpi_control: str = "year"

    sea_conflicts: tuple[tuple[int, int], ...] = ((1618, 1648), (1688, 1697), (1700, 1721), (1701, 1714), (1756, 1762))
    sea_variants: tuple[str, ...] = ("start", "full-period", "midpoint")
    sea_exclusions: tuple[tuple[int, int], ...] = ((1628, 1648),)
    sea_window: int = 5
    sea_n_boot: int = 10_000
    sea_two_sided: bool = True

    seed: int = 0
    output: str = "run"
    workers: int = 1

    @property
    def fixed_order(self) -> int | None:
        return None if _AUTO.match(self.order) else int(self.order)

    @property
    def criterion(self) -> str:
        m = _AUTO.match(self.order)
        return (m.group(1) or "bic").lower() if m else "bic"

    @property
    def reference_window(self) -> int:
        if self.snapshot_window is not None:
            return self.snapshot_window
        return self.windows[len(self.windows) // 2]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form (output directory excluded)."""
        d = self.to_dict()
        d.pop("output")
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def validate(self, n_locations: int | None = None, n_obs: int | None = None) -> "RunConfig":
        """Check everything that can be checked before computing anything.

        With ``n_locations`` (and optionally ``n_obs``, the differenced panel
        length) the window/order arithmetic is checked too.
        """
        for name in ("panel", "catalog", "coordinates"):
            path = getattr(self, name)
            if path is not None and not os.path.exists(path):
                raise ConfigError(f"{name} file not found: {path}")
        if self.gap_policy not in ("strict", "lenient"):
            raise ConfigError(f"gap_policy must be strict or lenient, got {self.gap_policy!r}")
        if self.winsorize is not None and not 0 < self.winsorize < 0.5:
            raise ConfigError("winsorize must lie in (0, 0.5) or be off")
        if not _AUTO.match(self.order):
            try:
                if int(self.order) < 1:
                    raise ValueError
            except ValueError:
                raise ConfigError(f"order must be a positive integer or auto(criterion), got {self.order!r}") from None
        if self.order_max < 1:
            raise ConfigError("order_max must be at least 1")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if self.method not in ("generalized", "cholesky"):
            raise ConfigError(f"unknown FEVD method {self.method!r}")
        if not self.windows:
            raise ConfigError("window set is empty")
        if self.adf_form not in ("constant", "constant+trend", "none"):
            raise ConfigError(f"unknown ADF form {self.adf_form!r}")
        if not 0 <= self.retain <= self.highlight:
            raise ConfigError("network thresholds need 0 <= retain <= highlight")
        for f in self.formats:
            if f not in ("json", "graphml", "dot"):
                raise ConfigError(f"unknown network format {f!r}")
        if any(not 0 < q < 1 for q in self.quantiles):
            raise ConfigError("quantiles must lie in (0, 1)")
        if self.n_boot < 1 or self.sea_n_boot < 100:
            raise ConfigError("n_boot must be >= 1 and sea n_boot >= 100")
        if self.cpi_control not in ("year", "window"):
            raise ConfigError(f"unknown cpi_control {self.cpi_control!r}")
        for v in self.sea_variants:
            if v not in ("start", "full-period", "midpoint"):
                raise ConfigError(f"unknown SEA variant {v!r}")
        if self.sea_window < 1:
            raise ConfigError("sea window must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if n_locations is not None:
            p = self.fixed_order or self.order_max
            for w in sorted(set(self.windows) | {self.reference_window}):
                check_window(w, n_locations, p, n_obs)
        return self


_KEYS: dict[str, dict[str, tuple[str, Any]]] = {
    "data": {
        "panel": ("panel", "path"),
        "year_column": ("year_column", str),
        "delimiter": ("delimiter", str),
        "gap_policy": ("gap_policy", str),
        "catalog": ("catalog", "path"),
        "catalog_columns": ("catalog_columns", "mapping"),
        "regions": ("regions", lambda s: _list(s, int)),
        "coordinates": ("coordinates", "path"),
    },
    "model": {
        "winsorize": ("winsorize", lambda s: None if str(s).strip().lower() in ("off", "none", "") else float(s)),
        "order": ("order", lambda s: str(s).strip().lower()),
        "order_max": ("order_max", int),
        "horizon": ("horizon", int),
        "method": ("method", str),
        "windows": ("windows", parse_windows),
        "dof_adjust": ("dof_adjust", _bool),
        "adf_lag": ("adf_lag", int),
        "adf_form": ("adf_form", str),
    },
    "network": {
        "snapshot_years": ("snapshot_years", lambda s: _list(s, int)),
        "snapshot_window": ("snapshot_window", lambda s: None if str(s).strip().lower() in ("auto", "") else int(s)),
        "retain": ("retain", float),
        "highlight": ("highlight", float),
        "formats": ("formats", lambda s: _list(s, lambda x: x.lower())),
    },
    "regression": {
        "exclusions": ("exclusions", parse_ranges),
        "nw_lag": ("nw_lag", lambda s: None if str(s).strip().lower() in ("auto", "") else int(s)),
        "quantiles": ("quantiles", lambda s: _list(s, float)),
        "n_boot": ("n_boot", int),
        "cpi_control": ("cpi_control", str),
    },
    "sea": {
        "conflicts": ("sea_conflicts", parse_ranges),
        "variants": ("sea_variants", lambda s: _list(s, lambda x: x.lower())),
        "exclusions": ("sea_exclusions", parse_ranges),
        "window": ("sea_window", int),
        "n_boot": ("sea_n_boot", int),
        "two_sided": ("sea_two_sided", _bool),
    },
    "run": {
        "seed": ("seed", int),
        "output": ("output", "path"),
        "workers": ("workers", int),
    },
}


def _convert(section: str, key: str, raw: str, base: Path | None) -> tuple[str, Any]:
    try:
        attr, conv = _KEYS[section][key]
    except KeyError:
        raise ConfigError(f"unknown configuration key [{section}] {key}") from None
    raw = raw.strip()
    try:
        if conv == "path":
            if raw.lower() in ("", "none"):
                return attr, None
            p = Path(raw)
            return attr, str(p if p.is_absolute() or base is None else base / p)
        if conv == "mapping":
            pairs = []
            for item in _list(raw):
                k, _, v = item.partition("=")
                if not v:
                    raise ConfigError(f"bad mapping entry {item!r}")
                pairs.append((k.strip(), v.strip()))
            return attr, tuple(pairs)
        return attr, conv(raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None


def load_config(path: str | os.PathLike | None = None, overrides: Mapping[str, str] | None = None, **kwargs) -> RunConfig:
    """Build a RunConfig from a file, ``section.key=value`` overrides and
    keyword arguments (attribute names), in increasing priority."""
    cfg = RunConfig()
    updates: dict[str, Any] = {}
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        base = Path(path).resolve().parent
        for section in parser.sections():
            if section not in _KEYS:
                raise ConfigError(f"unknown configuration section [{section}]")
            for key, raw in parser.items(section):
                attr, val = _convert(section, key, raw, base)
                updates[attr] = val
    for dotted, raw in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if not key:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        attr, val = _convert(section, key, raw, Path.cwd())
        updates[attr] = val
    names = {f.name for f in fields(RunConfig)}
    for k, v in kwargs.items():
        if v is None:
            continue
        if k not in names:
            raise ConfigError(f"unknown configuration attribute {k!r}")
        updates[k] = v
    return replace(cfg, **updates)


def apply_overrides(cfg: RunConfig, **kwargs) -> RunConfig:
    """``dataclasses.replace`` that ignores None values."""
    return replace(cfg, **{k: v for k, v in kwargs.items() if v is not None})
