"""End-to-end run: ingest -> spillover -> network -> regressions -> SEA.

Every file is written through :class:`RunWriter`, which records a SHA-256
per output so the manifest lists everything the run produced.
"""

from __future__ import annotations

import hashlib
import json
import logging
import platform
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .adf import adf_table, format_adf_table
from .config import RunConfig
from .errors import ConfigError, DataError
from .conflict import fatalities_per_year, filter_regions, parse_catalog
from .network import ThresholdSpec, apply_threshold, export, load_coordinates, to_graph
from .panel import first_difference, load_panel, pearson_correlation_matrix, winsorize, write_panel
from .regression import (
    build_design,
    cpi_control,
    ols_newey_west,
    quantile_fit,
    quantile_rows_csv,
    regression_table_csv,
    regression_table_json,
    scatter_fit_summary,
)
from .sea import EpochSpec, event_sets, sea_rows, superposed_epoch
from .spillover import (
    average_over_windows,
    fevd,
    index_rows,
    rolling_spillover,
    spillover_table,
    table_to_csv,
    table_to_json,
)
from .var import dumps_model, fit_var, select_order

logger = logging.getLogger(__name__)

__all__ = ["RunWriter", "run_pipeline", "StageFailure"]


class StageFailure(Exception):
    """Wraps the error that aborted a stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunWriter:
    root: Path
    outputs: dict[str, str] = field(default_factory=dict)

    def write(self, rel: str, data: str | bytes) -> Path:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        blob = data.encode("utf-8") if isinstance(data, str) else data
        path.write_bytes(blob)
        self.outputs[rel] = hashlib.sha256(blob).hexdigest()
        return path

    def digest(self) -> str:
        h = hashlib.sha256()
        for rel in sorted(self.outputs):
            h.update(f"{rel}\0{self.outputs[rel]}\n".encode())
        return h.hexdigest()


def _matrix_csv(labels, m) -> str:
    lines = ["," + ",".join(labels)]
    for lab, row in zip(labels, m):
        lines.append(lab + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _nearest(years: np.ndarray, target: int) -> int:
    return int(years[np.argmin(np.abs(years - target))])


def run_pipeline(cfg: RunConfig, output: str | Path | None = None) -> Path:
    """Execute every stage and return the run directory.

    Raises StageFailure after writing a ``FAILED`` marker and a manifest with
    ``status: failed``; outputs of completed stages are kept.
    """
    cfg.validate()
    root = Path(output or cfg.output)
    root.mkdir(parents=True, exist_ok=True)
    (root / "FAILED").unlink(missing_ok=True)
    w = RunWriter(root)
    stages: list[dict] = []
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    state: dict = {}

    def stage(name):
        def deco(fn):
            t0 = time.perf_counter()
            try:
                fn()
            except Exception as exc:
                stages.append({"name": name, "status": "failed", "error": f"{type(exc).__name__}: {exc}"})
                w.write("FAILED", f"stage: {name}\ncause: {type(exc).__name__}: {exc}\n\n{traceback.format_exc()}")
                _manifest(cfg, w, stages, started, "failed")
                raise StageFailure(name, exc) from exc
            if fn.__name__ != "_preflight":
                stages.append({"name": name, "status": "ok", "seconds": round(time.perf_counter() - t0, 3)})
            logger.info("stage %s done", name)
            return fn

        return deco

    @stage("ingest")
    def _load():
        if cfg.panel is None:
            raise ConfigError("no panel configured")
        state["raw"] = load_panel(cfg.panel, year_column=cfg.year_column, delimiter=cfg.delimiter, policy=cfg.gap_policy)

    # Window/order arithmetic is checked before any estimation; a failure
    # belongs to the stage that would have hit it.
    @stage("spillover")
    def _preflight():
        raw = state["raw"]
        cfg.validate(raw.N, raw.T - 1)

    @stage("winsorize")
    def _winsorize():
        raw = state["raw"]
        state["clean"] = clean = winsorize(raw, cfg.winsorize) if cfg.winsorize else raw
        w.write("panel/clean.csv", write_panel(clean))
        w.write("panel/correlation.csv", _matrix_csv(clean.locations, pearson_correlation_matrix(clean)))

    @stage("difference")
    def _difference():
        state["diff"] = diff = first_difference(state["clean"])
        w.write("panel/differenced.csv", write_panel(diff))

    @stage("adf")
    def _adf():
        w.write("adf.csv", format_adf_table(adf_table(state["diff"], cfg.adf_lag, cfg.adf_form)))

    @stage("order")
    def _order():
        diff = state["diff"]
        if cfg.fixed_order is not None:
            p = cfg.fixed_order
            doc = {"criterion": None, "chosen": p, "scores": {}}
        else:
            sel = select_order(diff, cfg.order_max, cfg.criterion)
            p = sel.chosen
            doc = {"criterion": sel.criterion, "chosen": p, "scores": {str(k): v for k, v in sel.scores.items()}}
        state["p"] = p
        w.write("var/order.json", _json(doc))
        model = fit_var(diff, p, dof_adjust=cfg.dof_adjust)
        state["full_table"] = spillover_table(fevd(model, cfg.horizon, cfg.method))
        w.write("var/full_model.json", dumps_model(model))
        w.write("spillover/full_sample.csv", table_to_csv(state["full_table"]))
        w.write("spillover/full_sample.json", table_to_json(state["full_table"]))

    @stage("spillover")
    def _rolling():
        diff, p = state["diff"], state["p"]
        avg = average_over_windows(diff, cfg.windows, p, cfg.horizon, cfg.method, dof_adjust=cfg.dof_adjust, workers=cfg.workers)
        ref = avg.runs.get(cfg.reference_window)
        if ref is None:
            ref = rolling_spillover(diff, cfg.reference_window, p, cfg.horizon, cfg.method, dof_adjust=cfg.dof_adjust)
        for win in sorted(avg.runs):
            run = avg.runs[win]
            w.write(f"spillover/rolling/window_{win:03d}.csv", index_rows(run.years, run.index))
        w.write("spillover/rolling_average.csv", index_rows(avg.years, avg.index, avg.n_windows))
        net = ref.net_series()
        lines = ["year," + ",".join(diff.locations)]
        for y, row in zip(ref.years, net):
            lines.append(f"{int(y)}," + ",".join("" if np.isnan(v) else repr(float(v)) for v in row))
        w.write(f"spillover/net_window_{cfg.reference_window:03d}.csv", "\n".join(lines) + "\n")
        state.update(avg=avg, ref=ref)

    @stage("network")
    def _network():
        coords = load_coordinates(cfg.coordinates) if cfg.coordinates else None
        spec = ThresholdSpec(cfg.retain, cfg.highlight)
        ref = state["ref"]
        snaps = {"full_sample": state["full_table"]}
        for target in cfg.snapshot_years:
            year = _nearest(ref.years, target)
            table = ref.table_at(year)
            if table is not None:
                snaps[f"snapshot_{year}"] = table
        for name, table in snaps.items():
            g = apply_threshold(to_graph(table, coords), spec)
            for fmt in cfg.formats:
                w.write(f"network/{name}.{fmt}", export(g, fmt))

    @stage("conflict")
    def _conflict():
        if cfg.catalog is None:
            state["fat"] = None
            return
        parsed = parse_catalog(cfg.catalog, dict(cfg.catalog_columns) or None)
        events = filter_regions(parsed.events, cfg.regions)
        fat = fatalities_per_year(events)
        state["fat"] = fat
        w.write("conflict/fatalities.csv", fat.to_csv())
        w.write(
            "conflict/report.json",
            _json(
                {
                    "kept": len(parsed.events),
                    "in_regions": len(events),
                    "regions": list(cfg.regions),
                    "dropped_missing_fatalities": parsed.dropped_missing_fatalities,
                    "rejected_missing_end": parsed.rejected_missing_end,
                }
            ),
        )

    @stage("regression")
    def _regress():
        fat = state["fat"]
        if fat is None:
            return
        avg = state["avg"]
        spill = avg.as_dict()
        window = cfg.reference_window if cfg.cpi_control == "window" else None
        cpi = cpi_control(state["clean"], cfg.cpi_control, window)
        samples = {"full": ()}
        if cfg.exclusions:
            samples["excl"] = cfg.exclusions
        ols = {}
        for name, excl in samples.items():
            design = build_design(spill, fat, cpi, excl)
            ols[name] = ols_newey_west(design, cfg.nw_lag)
            qfits = {f"q{round(tau * 100):02d}": quantile_fit(design, tau, cfg.n_boot, cfg.seed, workers=cfg.workers) for tau in cfg.quantiles}
            w.write(f"regression/quantile_{name}.csv", regression_table_csv(qfits))
            w.write(f"regression/quantile_{name}.json", regression_table_json(qfits))
            k = design.labels.index("log(Fatalities)")
            rows = [
                (tau, float(f.coefficients[k]), float(f.coefficients[k] - 1.96 * f.std_errors[k]), float(f.coefficients[k] + 1.96 * f.std_errors[k]))
                for tau, f in zip(cfg.quantiles, qfits.values())
            ]
            w.write(f"regression/quantile_process_{name}.csv", quantile_rows_csv(rows))
            x = design.regressors[:, k]
            try:
                sc = scatter_fit_summary(x, design.response, "rcs" if name == "full" else "linear")
            except DataError as exc:
                logger.warning("spline fit unavailable (%s); using a straight line", exc)
                sc = scatter_fit_summary(x, design.response, "linear")
            w.write(
                f"regression/scatter_{name}.json",
                _json(
                    {
                        "r": sc.r,
                        "p_value": sc.p_value,
                        "n": sc.n,
                        "mode": sc.mode,
                        "coefficients": sc.coefficients.tolist(),
                        "knots": None if sc.knots is None else sc.knots.tolist(),
                        "grid": sc.grid.tolist(),
                        "curve": sc.curve.tolist(),
                    }
                ),
            )
        w.write("regression/ols.csv", regression_table_csv(ols))
        w.write("regression/ols.json", regression_table_json(ols))

    @stage("sea")
    def _sea():
        avg = state["avg"]
        series = {int(y): (None if np.isnan(v) else float(v)) for y, v in zip(avg.years, avg.index)}
        for variant in cfg.sea_variants:
            events = event_sets(cfg.sea_conflicts, variant, cfg.sea_exclusions)
            spec = EpochSpec(events, cfg.sea_window, n_boot=cfg.sea_n_boot, seed=cfg.seed, two_sided=cfg.sea_two_sided)
            res = superposed_epoch(series, spec=spec)
            w.write(f"sea/{variant}.csv", sea_rows(res))

    _manifest(cfg, w, stages, started, "ok")
    return root


def _manifest(cfg: RunConfig, w: RunWriter, stages, started: str, status: str) -> None:
    doc = {
        "format": "dyspill.run-manifest",
        "version": 1,
        "status": status,
        "config": cfg.to_dict(),
        "config_hash": cfg.digest(),
        "seed": cfg.seed,
        "versions": {
            "dyspill": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "started": started,
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "stages": stages,
        "outputs": dict(sorted(w.outputs.items())),
        "outputs_digest": w.digest(),
    }
    (w.root / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=list) + "\n", encoding="utf-8")
