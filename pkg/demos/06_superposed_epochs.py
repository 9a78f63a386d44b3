"""Superposed epoch analysis of the spillover index around conflict starts.

Each epoch is standardized on its own, then averaged across events. Bands
come from compositing randomly placed pseudo-events.
"""

from dyspill import EpochSpec, average_over_windows, event_sets, first_difference, load_panel, superposed_epoch, winsorize
from dyspill.fixtures import WARS, fixture_path

avg = average_over_windows(first_difference(winsorize(load_panel(fixture_path("panel.csv")), 0.01)), range(30, 41), 1, 10)
series = dict(zip(avg.years.tolist(), avg.index.tolist()))
series = {y: v for y, v in series.items() if v == v}

for variant in ("start", "midpoint"):
    events = event_sets(WARS, variant)
    res = superposed_epoch(series, spec=EpochSpec(events, window=5, n_boot=5000, seed=3))
    lo, hi = res.bands[0.05]
    print(f"{variant}: events {res.events_used}")
    for k, lag in enumerate(res.lags):
        mark = "*" if res.significant(0.05)[k] else " "
        print(f"  {lag:+d} {res.composite[k]:+.2f}  [{lo[k]:+.2f}, {hi[k]:+.2f}] {mark}")
