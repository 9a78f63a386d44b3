"""Load the bundled three-city price panel, clean it, and check stationarity.

Levels of a price index usually carry a unit root; first differences should
not. The ADF table below shows both, using ten lags and an intercept.
"""

from dyspill import adf_table, first_difference, format_adf_table, load_panel, pearson_correlation_matrix, winsorize
from dyspill.fixtures import fixture_path

panel = load_panel(fixture_path("panel.csv"))
print(f"{panel.N} locations, {panel.T} years ({panel.years[0]}-{panel.years[-1]})")

clean = winsorize(panel, 0.01)
print("correlation of cleaned levels:")
print(pearson_correlation_matrix(clean).round(3))

print("\nlevels:")
print(format_adf_table(adf_table(clean)))
print("first differences:")
print(format_adf_table(adf_table(first_difference(clean))))
