"""Export the full-sample spillover table as a directed network.

Edges below the retention threshold (in percentage points) are dropped and
heavier ones are flagged for highlighting. DOT output can go straight to
Graphviz; GraphML opens in Gephi or networkx.
"""

from dyspill import apply_threshold, export, fevd, first_difference, fit_var, load_coordinates, load_panel, spillover_table, to_graph
from dyspill.network import ThresholdSpec
from dyspill.fixtures import fixture_path

diff = first_difference(load_panel(fixture_path("panel.csv")))
table = spillover_table(fevd(fit_var(diff, 1), 10))
graph = apply_threshold(to_graph(table, load_coordinates(fixture_path("coords.csv"))), ThresholdSpec(retain_above=1.0, highlight_above=10.0))

for e in graph.edges:
    print(f"{e.source:>10} -> {e.target:<10} {e.weight:6.2f}{'  *' if e.emphasis else ''}")
print()
print(export(graph, "dot").decode())
