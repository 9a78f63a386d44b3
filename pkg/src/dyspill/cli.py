"""Command-line entry point.

Every subcommand reads the same run configuration (``--config``, or
``--fixture`` for the bundled synthetic one), applies ``--set section.key=value``
overrides, and then its own flags, which win over both. Results go to
``--output`` or stdout.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure, 1 anything else.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .adf import adf_table, format_adf_table
from .config import RunConfig, load_config, parse_ranges, parse_windows
from .conflict import fatalities_per_year, filter_regions, parse_catalog
from .errors import ConfigError, DataError, NumericalError
from .fixtures import fixture_path
from .network import ThresholdSpec, apply_threshold, export, load_coordinates, to_graph
from .panel import PricePanel, first_difference, load_panel, winsorize, write_panel
from .pipeline import StageFailure, run_pipeline
from .regression import (
    build_design,
    cpi_control,
    ols_newey_west,
    quantile_fit,
    quantile_process,
    quantile_rows_csv,
    regression_table_csv,
    regression_table_json,
)
from .sea import EpochSpec, event_sets, sea_rows, superposed_epoch
from .spillover import (
    average_over_windows,
    check_window,
    fevd,
    index_rows,
    rolling_spillover,
    spillover_table,
    table_from_json,
    table_to_csv,
    table_to_json,
)
from .var import fit_var, select_order

logger = logging.getLogger("dyspill")

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageFailure):
        exc = exc.cause
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, (ConfigError, ValueError)):
        return EXIT_CONFIG
    if isinstance(exc, (NumericalError, ArithmeticError, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    return EXIT_OTHER


# -- argument plumbing ------------------------------------------------------


def _set_pair(text: str) -> tuple[str, str]:
    key, sep, val = text.partition("=")
    if not sep or "." not in key:
        raise argparse.ArgumentTypeError(f"expected section.key=value, got {text!r}")
    return key.strip(), val


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="FILE", help="run configuration file (INI grammar, see dyspill.config)")
    src.add_argument("--fixture", action="store_true", help="use the bundled synthetic three-city configuration")
    g.add_argument("--set", dest="sets", metavar="SECTION.KEY=VALUE", action="append", type=_set_pair, default=[], help="override one config key (repeatable)")
    g.add_argument("--panel", metavar="CSV", help="price panel: year column plus one column per location")
    g.add_argument("--seed", type=int, help="master seed")
    g.add_argument("--workers", type=int, help="worker threads for window and bootstrap loops")
    g.add_argument("-o", "--output", metavar="PATH", help="output file (directory for 'pipeline'); stdout if omitted")
    g.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")


def _model_flags(p: argparse.ArgumentParser, window: bool = True) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--order", metavar="P|auto(CRIT)", help="VAR order, or auto(aic|bic|hq)")
    g.add_argument("--order-max", type=int, help="largest order tried by auto selection")
    g.add_argument("--horizon", type=int, metavar="H", help="forecast horizon for the FEVD")
    g.add_argument("--method", choices=("generalized", "cholesky"))
    g.add_argument("--winsorize", type=float, metavar="P", help="winsorizing fraction (0 disables)")
    if window:
        g.add_argument("--window", type=int, metavar="W", help="single rolling-window length")
        g.add_argument("--windows", metavar="SPEC", help="window set such as 30-40 or 30,35,40")


def _regression_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("regression inputs")
    g.add_argument("--catalog", metavar="CSV", help="conflict catalog")
    g.add_argument("--regions", metavar="CODES", help="comma-separated region codes to keep")
    g.add_argument("--spillover", metavar="CSV", help="precomputed index rows (year,value[,n_windows]); computed from the panel otherwise")
    g.add_argument("--exclude", metavar="RANGES", help="year ranges dropped from the sample, e.g. 1628-1648")
    g.add_argument("--cpi-control", choices=("year", "window"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dyspill", description="Spillover indices, networks and supporting statistics for price panels.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("pipeline", help="run every stage and write a run directory with a manifest")
    _common(p)

    p = sub.add_parser("ingest", help="load, winsorize and difference a price panel")
    _common(p)
    p.add_argument("--policy", choices=("strict", "lenient"), help="gap handling")
    p.add_argument("--winsorize", type=float, metavar="P", help="winsorizing fraction (0 disables)")
    p.add_argument("--levels", action="store_true", help="skip first differencing")

    p = sub.add_parser("adf", help="augmented Dickey-Fuller table for every location")
    _common(p)
    p.add_argument("--lag", type=int, help="augmentation lags (default 10)")
    p.add_argument("--form", choices=("constant", "constant+trend", "none"))
    p.add_argument("--levels", action="store_true", help="test the levels rather than first differences")

    p = sub.add_parser("spillover", help="one spillover table, full sample or a single window")
    _common(p)
    _model_flags(p)
    p.add_argument("--end-year", type=int, metavar="YEAR", help="terminal year of the window (default: last year)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("rolling", help="rolling total-spillover index, one window or averaged over a set")
    _common(p)
    _model_flags(p)
    p.add_argument("--net", action="store_true", help="emit per-location net spillovers (single window only)")

    p = sub.add_parser("network", help="thresholded spillover network export")
    _common(p)
    _model_flags(p)
    p.add_argument("--table", metavar="JSON", help="spillover table written by 'spillover --format json'")
    p.add_argument("--end-year", type=int, metavar="YEAR", help="terminal year when --window is given")
    p.add_argument("--retain", type=float, help="keep edges with weight above this (percent)")
    p.add_argument("--highlight", type=float, help="emphasise edges with weight above this (percent)")
    p.add_argument("--format", choices=("dot", "graphml", "json"), default="json")
    p.add_argument("--coords", metavar="CSV", help="node coordinates: label,lat,lon")

    p = sub.add_parser("regress", help="OLS with Newey-West errors of spillover on log fatalities")
    _common(p)
    _model_flags(p)
    _regression_flags(p)
    p.add_argument("--nw-lag", type=int, metavar="L", help="Newey-West lag (default floor(4(n/100)^(2/9)))")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("quantreg", help="quantile regressions with bootstrap standard errors")
    _common(p)
    _model_flags(p)
    _regression_flags(p)
    p.add_argument("--quantiles", metavar="LIST", help="comma-separated quantile levels")
    p.add_argument("--n-boot", type=int, help="bootstrap replicates")
    p.add_argument("--process", action="store_true", help="emit the log(Fatalities) coefficient path instead of the table")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("sea", help="superposed epoch analysis of the spillover index around conflicts")
    _common(p)
    _model_flags(p)
    p.add_argument("--series", metavar="CSV", help="year,value rows to analyse instead of the computed index")
    p.add_argument("--variant", choices=("start", "full-period", "midpoint"), default="start")
    p.add_argument("--conflicts", metavar="RANGES", help="conflict periods, e.g. 1618-1648,1756-1762")
    p.add_argument("--exclude", metavar="RANGES", help="years removed from the full-period event set")
    p.add_argument("--half-width", type=int, metavar="W", help="epoch half-width in years")
    p.add_argument("--n-boot", type=int, help="null resamples (>= 100)")
    p.add_argument("--one-sided", action="store_true", help="one-sided bands")
    return parser


def _config(args) -> RunConfig:
    path = fixture_path("run.cfg") if args.fixture else args.config
    kw: dict = {}
    g = vars(args)
    simple = {
        "panel": "panel",
        "seed": "seed",
        "workers": "workers",
        "order_max": "order_max",
        "horizon": "horizon",
        "method": "method",
        "policy": "gap_policy",
        "form": "adf_form",
        "lag": "adf_lag",
        "catalog": "catalog",
        "cpi_control": "cpi_control",
        "nw_lag": "nw_lag",
        "n_boot": "n_boot",
        "coords": "coordinates",
        "retain": "retain",
        "highlight": "highlight",
        "half_width": "sea_window",
    }
    for flag, attr in simple.items():
        if g.get(flag) is not None:
            kw[attr] = g[flag]
    if g.get("order") is not None:
        kw["order"] = str(g["order"]).strip().lower()
    overrides = dict(args.sets)
    if g.get("winsorize") is not None:
        # None means "not given" to load_config, so switch off via the override map
        overrides["model.winsorize"] = str(g["winsorize"]) if g["winsorize"] else "off"
    if g.get("windows") is not None:
        kw["windows"] = parse_windows(g["windows"])
    if g.get("window") is not None:
        kw["windows"] = (g["window"],)
        kw["snapshot_window"] = g["window"]
    if g.get("regions") is not None:
        kw["regions"] = tuple(int(x) for x in g["regions"].split(","))
    if g.get("exclude") is not None:
        key = "sea_exclusions" if args.command == "sea" else "exclusions"
        kw[key] = parse_ranges(g["exclude"])
    if g.get("quantiles") is not None:
        kw["quantiles"] = tuple(float(x) for x in g["quantiles"].split(","))
    if args.command == "sea":
        if g.get("n_boot") is not None:
            kw["sea_n_boot"] = kw.pop("n_boot")
        if g.get("conflicts") is not None:
            kw["sea_conflicts"] = parse_ranges(g["conflicts"])
        if g.get("one_sided"):
            kw["sea_two_sided"] = False
        kw["sea_variants"] = (args.variant,)
    if args.command == "pipeline" and args.output:
        kw["output"] = args.output
    cfg = load_config(path, overrides, **kw)
    return cfg.validate()


# -- shared computations ----------------------------------------------------


def _panel(cfg: RunConfig, *, difference: bool = True) -> tuple[PricePanel, PricePanel]:
    if cfg.panel is None:
        raise ConfigError("no panel given; use --panel, --config or --fixture")
    raw = load_panel(cfg.panel, year_column=cfg.year_column, delimiter=cfg.delimiter, policy=cfg.gap_policy)
    clean = winsorize(raw, cfg.winsorize) if cfg.winsorize else raw
    return clean, (first_difference(clean) if difference else clean)


def _order(cfg: RunConfig, data) -> int:
    if cfg.fixed_order is not None:
        return cfg.fixed_order
    sel = select_order(data, cfg.order_max, cfg.criterion)
    logger.info("%s selected p=%d", sel.criterion, sel.chosen)
    return sel.chosen


def _window_slice(diff: PricePanel, window: int | None, end_year: int | None) -> PricePanel:
    if window is None:
        if end_year is not None:
            raise ConfigError("--end-year needs --window")
        return diff
    last = int(diff.years[-1]) if end_year is None else end_year
    first = last - window + 1
    if first < diff.years[0] or last > diff.years[-1]:
        raise DataError(f"window {first}-{last} is outside the panel ({diff.years[0]}-{diff.years[-1]})")
    return diff.slice_years(first, last)


def _single_table(cfg: RunConfig, args):
    _, diff = _panel(cfg)
    window = getattr(args, "window", None)
    sample = _window_slice(diff, window, getattr(args, "end_year", None))
    p = _order(cfg, sample)
    if window is not None:
        check_window(window, diff.N, p, diff.T)
    return spillover_table(fevd(fit_var(sample, p, dof_adjust=cfg.dof_adjust), cfg.horizon, cfg.method))


def _read_index(path: str) -> dict[int, float | None]:
    out: dict[int, float | None] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.lower().startswith("year"):
            raise DataError(f"{path}: expected a year,value header")
        for n, line in enumerate(fh, start=2):
            cells = line.strip().split(",")
            if not cells[0]:
                continue
            try:
                out[int(cells[0])] = float(cells[1]) if len(cells) > 1 and cells[1] else None
            except ValueError:
                raise DataError(f"{path}: line {n} is not numeric") from None
    return out


def _index(cfg: RunConfig, args):
    """Averaged rolling index (or a supplied one) and the cleaned panel."""
    spill_path = getattr(args, "spillover", None) or getattr(args, "series", None)
    if spill_path:
        clean = _panel(cfg, difference=False)[0] if cfg.panel else None
        return _read_index(spill_path), clean
    clean, diff = _panel(cfg)
    avg = average_over_windows(diff, cfg.windows, _order(cfg, diff), cfg.horizon, cfg.method, dof_adjust=cfg.dof_adjust, workers=cfg.workers)
    return avg.as_dict(), clean


def _designs(cfg: RunConfig, args):
    if cfg.catalog is None:
        raise ConfigError("no conflict catalog given; use --catalog or a config")
    spill, clean = _index(cfg, args)
    parsed = parse_catalog(cfg.catalog, dict(cfg.catalog_columns) or None)
    logger.info(parsed.report)
    fat = fatalities_per_year(filter_regions(parsed.events, cfg.regions))
    cpi = None
    if clean is not None:
        cpi = cpi_control(clean, cfg.cpi_control, cfg.reference_window if cfg.cpi_control == "window" else None)
    designs = {"full": build_design(spill, fat, cpi)}
    if cfg.exclusions:
        designs["excl"] = build_design(spill, fat, cpi, cfg.exclusions)
    return designs


# -- subcommands --------------------------------------------------------------


def cmd_pipeline(cfg: RunConfig, args) -> str | bytes | None:
    root = run_pipeline(cfg)
    print(str(root))
    return None


def cmd_ingest(cfg, args):
    _, out = _panel(cfg, difference=not args.levels)
    return write_panel(out)


def cmd_adf(cfg, args):
    _, data = _panel(cfg, difference=not args.levels)
    return format_adf_table(adf_table(data, cfg.adf_lag, cfg.adf_form))


def cmd_spillover(cfg, args):
    table = _single_table(cfg, args)
    return table_to_json(table) if args.format == "json" else table_to_csv(table)


def cmd_rolling(cfg, args):
    _, diff = _panel(cfg)
    p = _order(cfg, diff)
    if args.net:
        if len(cfg.windows) != 1:
            raise ConfigError("--net needs a single --window")
        run = rolling_spillover(diff, cfg.windows[0], p, cfg.horizon, cfg.method, dof_adjust=cfg.dof_adjust)
        lines = ["year," + ",".join(diff.locations)]
        for y, row in zip(run.years, run.net_series()):
            lines.append(f"{int(y)}," + ",".join("" if np.isnan(v) else repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"
    avg = average_over_windows(diff, cfg.windows, p, cfg.horizon, cfg.method, dof_adjust=cfg.dof_adjust, workers=cfg.workers)
    return index_rows(avg.years, avg.index, avg.n_windows)


def cmd_network(cfg, args):
    if args.table:
        with open(args.table, encoding="utf-8") as fh:
            table = table_from_json(fh.read())
    else:
        table = _single_table(cfg, args)
    coords = load_coordinates(cfg.coordinates) if cfg.coordinates else None
    graph = apply_threshold(to_graph(table, coords), ThresholdSpec(cfg.retain, cfg.highlight))
    return export(graph, args.format)


def cmd_regress(cfg, args):
    fits = {name: ols_newey_west(d, cfg.nw_lag) for name, d in _designs(cfg, args).items()}
    return regression_table_json(fits) if args.format == "json" else regression_table_csv(fits)


def cmd_quantreg(cfg, args):
    designs = _designs(cfg, args)
    if args.process:
        out = []
        for name, d in designs.items():
            rows = quantile_process(d, cfg.quantiles, cfg.n_boot, cfg.seed, workers=cfg.workers)
            body = quantile_rows_csv(rows)
            out.append(body if len(designs) == 1 else f"# sample: {name}\n{body}")
        return "".join(out)
    fits = {}
    for name, d in designs.items():
        for tau in cfg.quantiles:
            fits[f"{name}:q{round(tau * 100):02d}"] = quantile_fit(d, tau, cfg.n_boot, cfg.seed, workers=cfg.workers)
    return regression_table_json(fits) if args.format == "json" else regression_table_csv(fits)


def cmd_sea(cfg, args):
    series, _ = _index(cfg, args)
    events = event_sets(cfg.sea_conflicts, args.variant, cfg.sea_exclusions)
    spec = EpochSpec(events, cfg.sea_window, n_boot=cfg.sea_n_boot, seed=cfg.seed, two_sided=cfg.sea_two_sided)
    return sea_rows(superposed_epoch(series, spec=spec))


COMMANDS = {
    "pipeline": cmd_pipeline,
    "ingest": cmd_ingest,
    "adf": cmd_adf,
    "spillover": cmd_spillover,
    "rolling": cmd_rolling,
    "network": cmd_network,
    "regress": cmd_regress,
    "quantreg": cmd_quantreg,
    "sea": cmd_sea,
}


def _emit(result, output: str | None) -> None:
    if result is None:
        return
    blob = result.encode("utf-8") if isinstance(result, str) else result
    if output:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(blob)
    else:
        sys.stdout.buffer.write(blob)
        sys.stdout.flush()


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        cfg = _config(args)
        result = COMMANDS[args.command](cfg, args)
        _emit(result, None if args.command == "pipeline" else args.output)
    except StageFailure as exc:
        print(f"dyspill: {exc.stage} stage failed: {type(exc.cause).__name__}: {exc.cause}", file=sys.stderr)
        return exit_code(exc)
    except Exception as exc:
        code = exit_code(exc)
        if code == EXIT_OTHER:
            raise
        print(f"dyspill: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
