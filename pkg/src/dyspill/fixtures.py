"""Synthetic three-city fixture used by the demos, tests and pipeline smoke runs.

Price changes follow a VAR(1) whose cross-city coefficients switch on during
four war periods, so a rolling spillover index should rise around them. The
files shipped in ``dyspill/data`` are exactly ``write_fixture(seed=7)``.
"""

from __future__ import annotations

import csv
import io
from importlib import resources
from pathlib import Path

import numpy as np

from .panel import PricePanel, write_panel

__all__ = ["FIRST_YEAR", "LAST_YEAR", "CITIES", "WARS", "synthetic_panel", "synthetic_catalog", "write_fixture", "fixture_path"]

FIRST_YEAR, LAST_YEAR = 1562, 1793
CITIES = ("Amsterdam", "London", "Gdansk")
COORDS = {"Amsterdam": (52.37, 4.90), "London": (51.51, -0.13), "Gdansk": (54.35, 18.65)}
WARS = ((1618, 1648), (1688, 1697), (1700, 1721), (1701, 1714), (1756, 1762))


def _in_war(year: int) -> bool:
    return any(a <= year <= b for a, b in WARS)


def synthetic_panel(seed: int = 7) -> PricePanel:
    rng = np.random.default_rng(seed)
    years = np.arange(FIRST_YEAR, LAST_YEAR + 1)
    n = len(CITIES)
    calm = 0.15 * np.eye(n)
    war = calm + 0.35 * (np.ones((n, n)) - np.eye(n))
    dy = np.zeros((len(years), n))
    for t in range(1, len(years)):
        phi = war if _in_war(int(years[t])) else calm
        dy[t] = phi @ dy[t - 1] + rng.standard_normal(n)
    levels = 1.0 + 0.05 * np.cumsum(dy, axis=0)
    levels -= min(0.0, levels.min() - 0.2)
    return PricePanel(years, CITIES, np.round(levels, 6))


def synthetic_catalog() -> str:
    rows = [
        ("c1", "Long war A", 3, 1618, 1648, 3000000),
        ("c2", "War B", 4, 1688, 1697, 680000),
        ("c3", "Northern war", 3, 1700, 1721, 400000),
        ("c4", "Succession war", 4, 1701, 1714, 1250000),
        ("c5", "Seven-year war", 4, 1756, 1762, 1000000),
        ("c6", "Border war", 3, 1590, 1595, 60000),
        ("c7", "Revolt", 4, 1667, 1668, 20000),
        ("c8", "Overseas war", 2, 1740, 1748, 500000),
        ("c9", "Siege", 4, 1733, 1735, 85000),
        ("c10", "Unknown toll", 3, 1770, 1772, ""),
    ]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "name", "region", "start_year", "end_year", "fatalities"])
    w.writerows(rows)
    return buf.getvalue()


def _coords_csv() -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "lat", "lon"])
    for k, (lat, lon) in COORDS.items():
        w.writerow([k, lat, lon])
    return buf.getvalue()


CONFIG = """\
# Synthetic three-city run; defaults mirror the full analysis except the
# bootstrap sizes, which are reduced to keep the smoke run quick.
[data]
panel = panel.csv
catalog = conflicts.csv
coordinates = coords.csv
regions = 3, 4

[model]
winsorize = 0.01
order = auto(bic)
order_max = 3
horizon = 10
method = generalized
windows = 30-40

[network]
snapshot_years = 1617, 1622, 1710, 1757, 1762
retain = 0
highlight = 10

[regression]
exclusions = 1628-1648
quantiles = 0.25, 0.5, 0.75, 0.9
n_boot = 100

[sea]
window = 5
n_boot = 2000

[run]
seed = 2024
"""


def write_fixture(directory, seed: int = 7) -> Path:
    """Write panel.csv, conflicts.csv, coords.csv and run.cfg into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_panel(synthetic_panel(seed), d / "panel.csv")
    (d / "conflicts.csv").write_text(synthetic_catalog(), encoding="utf-8")
    (d / "coords.csv").write_text(_coords_csv(), encoding="utf-8")
    (d / "run.cfg").write_text(CONFIG, encoding="utf-8")
    return d


def fixture_path(name: str = "") -> Path:
    """Path to the bundled fixture directory (or a file inside it)."""
    base = Path(str(resources.files("dyspill") / "data"))
    return base / name if name else base
