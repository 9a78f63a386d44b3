"""Rolling total spillover, averaged over window lengths 30 to 40.

The synthetic panel switches on cross-city dependence during its war years,
so the averaged index should sit higher in windows that cover them.
"""

import numpy as np

from dyspill import average_over_windows, first_difference, load_panel, winsorize
from dyspill.fixtures import WARS, fixture_path

diff = first_difference(winsorize(load_panel(fixture_path("panel.csv")), 0.01))
avg = average_over_windows(diff, range(30, 41), p=1, H=10, method="generalized")

ok = np.isfinite(avg.index)
print(f"{ok.sum()} window end years, {len(avg.runs)} window lengths")
for y, v in list(zip(avg.years[ok], avg.index[ok]))[::10]:
    print(f"  {y}: {v:6.2f} {'#' * int(v / 2)}")

# Window ends whose 30-year span overlaps a war versus those that do not.
def overlaps(end):
    return any(a <= end and b >= end - 29 for a, b in WARS)

war = [v for y, v in zip(avg.years[ok], avg.index[ok]) if overlaps(y)]
calm = [v for y, v in zip(avg.years[ok], avg.index[ok]) if not overlaps(y)]
print(f"mean index, windows touching a war: {np.mean(war):.2f}; others: {np.mean(calm) if calm else float('nan'):.2f}")
