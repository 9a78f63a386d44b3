"""Spillover indices from vector autoregressions, with the inferential tools
used to relate them to conflict data.

The public surface is re-exported here; the CLI lives in :mod:`dyspill.cli`.
"""

__version__ = "0.1.0"

from .adf import AdfResult, PValueBound, adf_table, adf_test, critical_values, format_adf_table
from .config import RunConfig, load_config
from .conflict import ConflictEvent, FatalitySeries, conflict_midpoint, fatalities_per_year, filter_regions, parse_catalog
from .errors import ConfigError, DataError, DyspillError, InfeasibleWindowError, NumericalError, RankDeficiencyError
from .network import SpilloverGraph, ThresholdSpec, apply_threshold, export, graph_from_json, load_coordinates, to_graph
from .panel import PricePanel, first_difference, load_panel, pearson_correlation_matrix, winsorize, write_panel
from .regression import (
    RegressionDesign,
    RegressionFit,
    build_design,
    newey_west_cov,
    ols_fit,
    ols_newey_west,
    quantile_coefficients,
    quantile_fit,
    quantile_process,
    regression_table_csv,
    scatter_fit_summary,
)
from .sea import EpochSpec, SeaResult, event_sets, superposed_epoch
from .spillover import (
    FevdMatrix,
    SpilloverTable,
    average_over_windows,
    fevd,
    net_pairwise,
    rolling_spillover,
    spillover_table,
    table_to_csv,
    table_to_json,
)
from .var import VarModel, fit_var, ma_coefficients, select_order, simulate_var, stability_check

__all__ = [
    "__version__",
    "AdfResult",
    "PValueBound",
    "adf_table",
    "adf_test",
    "critical_values",
    "format_adf_table",
    "RunConfig",
    "load_config",
    "ConflictEvent",
    "FatalitySeries",
    "conflict_midpoint",
    "fatalities_per_year",
    "filter_regions",
    "parse_catalog",
    "ConfigError",
    "DataError",
    "DyspillError",
    "InfeasibleWindowError",
    "NumericalError",
    "RankDeficiencyError",
    "SpilloverGraph",
    "ThresholdSpec",
    "apply_threshold",
    "export",
    "graph_from_json",
    "load_coordinates",
    "to_graph",
    "PricePanel",
    "first_difference",
    "load_panel",
    "pearson_correlation_matrix",
    "winsorize",
    "write_panel",
    "RegressionDesign",
    "RegressionFit",
    "build_design",
    "newey_west_cov",
    "ols_fit",
    "ols_newey_west",
    "quantile_coefficients",
    "quantile_fit",
    "quantile_process",
    "regression_table_csv",
    "scatter_fit_summary",
    "EpochSpec",
    "SeaResult",
    "event_sets",
    "superposed_epoch",
    "FevdMatrix",
    "SpilloverTable",
    "average_over_windows",
    "fevd",
    "net_pairwise",
    "rolling_spillover",
    "spillover_table",
    "table_to_csv",
    "table_to_json",
    "VarModel",
    "fit_var",
    "ma_coefficients",
    "select_order",
    "simulate_var",
    "stability_check",
]
