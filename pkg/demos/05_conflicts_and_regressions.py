"""Relate the averaged spillover index to war fatalities.

Fatalities are spread evenly over each conflict's years, logged, and used as
a regressor next to the cross-city mean CPI. OLS gets Newey-West errors;
quantile regressions get pairs-bootstrap errors.
"""

from dyspill import (
    average_over_windows,
    build_design,
    fatalities_per_year,
    filter_regions,
    first_difference,
    load_panel,
    ols_newey_west,
    parse_catalog,
    quantile_fit,
    regression_table_csv,
    winsorize,
)
from dyspill.regression import cpi_control
from dyspill.fixtures import fixture_path

clean = winsorize(load_panel(fixture_path("panel.csv")), 0.01)
avg = average_over_windows(first_difference(clean), range(30, 41), 1, 10)

catalog = parse_catalog(fixture_path("conflicts.csv"))
print(catalog.report)
fat = fatalities_per_year(filter_regions(catalog.events, (3, 4)))

design = build_design(avg.as_dict(), fat, cpi_control(clean))
print(f"{design.n} usable years\n")

fits = {"OLS": ols_newey_west(design)}
for tau in (0.25, 0.5, 0.75):
    fits[f"q{int(tau * 100)}"] = quantile_fit(design, tau, n_boot=200, seed=1)
print(regression_table_csv(fits))
