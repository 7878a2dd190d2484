"""Rolling-origin experiment driver, result store and persistence.

For each evaluation day the driver estimates weights on the trailing
validation window, produces all seven methods' 96-slot forecasts, and scores
them against the actuals; results for a day depend only on data up to the
previous day (no lookahead).
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .combine import METHODS, CombinerConfig, run_all_methods
from .covariance import ZeroPattern
from .errors import InsufficientHistoryError
from .evaluate import SLOTS_PER_DAY, ScoreTable, boxplot_data, dm_summary, mae, mse, table_report
from .ingest import ColumnMapping, parse_load_csv
from .naive import add_drw_expert
from .panel import ForecastSet, Hierarchy, Panel
from .synth import ExpertSpec, SynthSpec, synth_generate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a rolling run needs, serializable to/from a flat document."""

    # data source: either a synth spec or csv paths
    synth: SynthSpec | None = None
    actuals_csv: str | None = None
    forecast_csvs: dict = field(default_factory=dict)  # expert id -> path
    timezone: str | None = None
    total_id: str = "total"
    bottom_ids: tuple[str, ...] = ()
    benchmark: str = "provider"
    window_days: int = 28
    min_window_days: int = 7
    strict_history: bool = False  # error instead of auto-shrinking early windows
    eval_start: dt.date | None = None
    eval_end: dt.date | None = None
    shrinkage: float | str = "auto"
    zero_pattern: str = ZeroPattern.CROSS_BOTH.value
    center: bool = False
    dm_alpha: float = 0.05
    output_dir: str = "results"
    seed: int = 0

    def __post_init__(self):
        if self.window_days < 7:
            raise ValueError("window_days must be >= 7")
        if self.min_window_days < 1:
            raise ValueError("min_window_days must be >= 1")
        object.__setattr__(self, "bottom_ids", tuple(self.bottom_ids))

    def combiner_config(self) -> CombinerConfig:
        return CombinerConfig(window_days=self.window_days,
                              shrinkage=self.shrinkage,
                              zero_pattern=ZeroPattern(self.zero_pattern),
                              center=self.center)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if self.synth is not None:
            d["synth"]["first_day"] = self.synth.first_day.isoformat()
            d["synth"]["experts"] = [dataclasses.asdict(e) for e in self.synth.experts]
        for key in ("eval_start", "eval_end"):
            if d[key] is not None:
                d[key] = d[key].isoformat()
        d["bottom_ids"] = list(self.bottom_ids)
        d["forecast_csvs"] = dict(self.forecast_csvs)
        return d

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


@dataclass
class ResultStore:
    """In-memory results of one rolling run."""

    config: ExperimentConfig
    hierarchy: Hierarchy
    series_ids: tuple[str, ...]
    methods: tuple[str, ...]          # seven method tags + benchmark column
    eval_days: list
    actuals: np.ndarray               # (series, day, 96)
    forecasts: dict                   # method -> (series, day, 96)
    weights: list                     # per day: dict of fitted weights
    scores: ScoreTable | None = None
    report: dict | None = None
    dm: dict | None = None            # series id -> (tags, percentage matrix)
    boxplots: dict | None = None


def load_data(config: ExperimentConfig) -> tuple[Panel, ForecastSet, Hierarchy]:
    """Materialize panel + base forecasts (without the naive expert)."""
    if config.synth is not None:
        return synth_generate(config.synth)
    if config.actuals_csv is None or not config.forecast_csvs:
        raise ValueError("config needs either a synth spec or csv paths")
    panel, _ = parse_load_csv(config.actuals_csv,
                              ColumnMapping(forecast=None),
                              timezone=config.timezone)
    bottom_ids = config.bottom_ids or tuple(
        s for s in panel.series_ids if s != config.total_id)
    hierarchy = Hierarchy(config.total_id, bottom_ids)
    forecasts = None
    for expert, path in sorted(config.forecast_csvs.items()):
        _, fset = parse_load_csv(path, ColumnMapping(actual=None),
                                 timezone=config.timezone, expert_id=expert)
        fset = _reorder_series(fset, panel.series_ids)
        forecasts = fset if forecasts is None else forecasts.with_expert(
            expert, fset.values[:, 0])
    return panel, forecasts, hierarchy


def _reorder_series(fset: ForecastSet, series_ids) -> ForecastSet:
    if fset.series_ids == tuple(series_ids):
        return fset
    order = [fset.series_ids.index(s) for s in series_ids]
    return ForecastSet(tuple(series_ids), fset.expert_ids, fset.first_day,
                       fset.values[order])


def _slice_forecasts(fset: ForecastSet, first: dt.date, last: dt.date) -> ForecastSet:
    i0, i1 = fset.day_index(first), fset.day_index(last)
    return ForecastSet(fset.series_ids, fset.expert_ids, first,
                       fset.values[:, :, i0:i1 + 1])


def rolling_run(config: ExperimentConfig,
                data: tuple[Panel, ForecastSet, Hierarchy] | None = None,
                ) -> ResultStore:
    """Run the daily rolling experiment over the configured evaluation range."""
    panel, base_forecasts, hierarchy = data if data is not None else load_data(config)
    if panel.series_ids != base_forecasts.series_ids:
        base_forecasts = _reorder_series(base_forecasts, panel.series_ids)

    # the naive expert needs the previous day, so forecasts start one day in
    fc_first = max(base_forecasts.first_day,
                   panel.first_day + dt.timedelta(days=1))
    fc_last = min(base_forecasts.last_day, panel.last_day)
    working = _slice_forecasts(base_forecasts, fc_first, fc_last)
    forecasts = add_drw_expert(panel, working)

    min_start = fc_first + dt.timedelta(days=config.min_window_days)
    eval_start = config.eval_start or fc_first + dt.timedelta(days=config.window_days)
    eval_end = config.eval_end or fc_last
    if eval_start < min_start:
        raise InsufficientHistoryError(
            f"evaluation start {eval_start} leaves less than the minimum "
            f"{config.min_window_days}-day window", first_missing_day=eval_start)
    if eval_end > fc_last:
        raise InsufficientHistoryError(
            f"evaluation end {eval_end} beyond data end {fc_last}",
            first_missing_day=fc_last + dt.timedelta(days=1))

    cc = config.combiner_config()
    n_days = (eval_end - eval_start).days + 1
    eval_days = [eval_start + dt.timedelta(days=k) for k in range(n_days)]
    n = len(panel.series_ids)
    store_fc = {m: np.empty((n, n_days, SLOTS_PER_DAY)) for m in METHODS}
    weights_log = []
    for di, day in enumerate(eval_days):
        available = (day - fc_first).days
        window = min(config.window_days, available)
        if window < config.window_days:
            if config.strict_history:
                raise InsufficientHistoryError(
                    f"only {available} days of history before {day}",
                    first_missing_day=day - dt.timedelta(days=config.window_days))
            log.warning("window auto-shrunk to %d days for origin %s", window, day)
        wout: dict = {}
        results = run_all_methods(day, panel, forecasts, hierarchy, cc,
                                  window_days=window, weights_out=wout)
        for m in METHODS:
            store_fc[m][:, di, :] = results[m].values
        weights_log.append({"day": day, "window_days": window, **wout})

    p0, p1 = panel.day_index(eval_start), panel.day_index(eval_end)
    actuals = panel.values[:, p0:p1 + 1, :]
    bench = config.benchmark
    f0, f1 = forecasts.day_index(eval_start), forecasts.day_index(eval_end)
    if bench in forecasts.expert_ids:
        j = forecasts.expert_ids.index(bench)
        store_fc[bench] = forecasts.values[:, j, f0:f1 + 1, :]
    else:
        raise ValueError(f"benchmark expert {bench!r} not among {forecasts.expert_ids}")

    methods = METHODS + (bench,)
    errors = {m: store_fc[m] - actuals for m in methods}
    mae_arr = np.stack([mae(errors[m], axis=1) for m in methods], axis=-1)
    mse_arr = np.stack([mse(errors[m], axis=1) for m in methods], axis=-1)
    scores = ScoreTable(panel.series_ids, methods, bench, mae_arr, mse_arr)

    store = ResultStore(config, hierarchy, panel.series_ids, methods, eval_days,
                        actuals, store_fc, weights_log, scores)
    store.report = table_report(scores, hierarchy.total_id)
    total_idx = panel.series_ids.index(hierarchy.total_id)
    # (days, horizons) error matrices for the total series
    per_day = {m: errors[m][total_idx].reshape(n_days, SLOTS_PER_DAY)
               for m in methods}
    if n_days >= 10:
        tags, matrix = dm_summary(per_day, alpha=config.dm_alpha, methods=methods)
        store.dm = {hierarchy.total_id: (tags, matrix)}
    else:
        log.warning("skipping DM summary: only %d evaluation days (< 10)", n_days)
        store.dm = {}
    rm = scores.rmae
    store.boxplots = {m: rm[total_idx, :, scores.methods.index(m)]
                      for m in methods if m != bench}
    return store


def _float_csv(df: pd.DataFrame, path: Path) -> None:
    df.to_csv(path, index=False, float_format="%.17g")


def export_results(store: ResultStore, out_dir=None) -> Path:
    """Persist a completed run as plain files; idempotent for a given store."""
    out = Path(out_dir if out_dir is not None else store.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    rm = store.scores.rmae
    for si, series in enumerate(store.series_ids):
        for h in range(SLOTS_PER_DAY):
            for mi, m in enumerate(store.methods):
                rows.append({
                    "series": series, "horizon": h + 1, "method": m,
                    "mae": store.scores.mae[si, h, mi],
                    "mse": store.scores.mse[si, h, mi],
                    "rmae": rm[si, h, mi],
                })
    _float_csv(pd.DataFrame(rows), out / "scores.csv")

    (out / "table1.json").write_text(
        json.dumps(store.report, indent=2, sort_keys=True) + "\n")
    (out / "table1.txt").write_text(format_table(store.report))

    box_rows = []
    for stats in boxplot_data(store.boxplots):
        box_rows.append({
            "method": stats.method, "low_whisker": stats.low_whisker,
            "q1": stats.q1, "median": stats.median, "q3": stats.q3,
            "high_whisker": stats.high_whisker,
            "n_outliers": len(stats.outliers),
        })
    _float_csv(pd.DataFrame(box_rows), out / "boxplot_rmae.csv")

    for series, (tags, matrix) in store.dm.items():
        dm_df = pd.DataFrame(matrix, index=list(tags), columns=list(tags))
        dm_df.to_csv(out / f"dm_summary_{series}.csv")

    np.save(out / "actuals.npy", store.actuals)
    for m in store.methods:
        np.save(out / f"forecasts_{m}.npy", store.forecasts[m])
    omegas = np.stack([w["gw"].omega for w in store.weights])
    np.save(out / "weights_gw.npy", omegas)

    manifest = {
        "config": store.config.to_dict(),
        "config_sha256": store.config.digest(),
        "seed": store.config.seed,
        "version": __version__,
        "eval_days": [d.isoformat() for d in store.eval_days],
        "series": list(store.series_ids),
        "methods": list(store.methods),
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a config from a parsed flat document (e.g. a YAML file)."""
    doc = dict(doc)
    synth = doc.pop("synth", None)
    if synth is not None:
        synth = dict(synth)
        if "first_day" in synth:
            synth["first_day"] = dt.date.fromisoformat(synth["first_day"])
        experts = synth.pop("experts", None)
        if experts is not None:
            synth["experts"] = tuple(_expert_spec(e) for e in experts)
        for tup_key in ("zone_levels", "daily_profile", "weekly_modulation"):
            if synth.get(tup_key) is not None:
                synth[tup_key] = tuple(synth[tup_key])
        synth = SynthSpec(**synth)
    for key in ("eval_start", "eval_end"):
        if doc.get(key) is not None:
            doc[key] = dt.date.fromisoformat(str(doc[key]))
    if "bottom_ids" in doc:
        doc["bottom_ids"] = tuple(doc["bottom_ids"])
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(synth=synth, **doc)


def _expert_spec(e: dict) -> ExpertSpec:
    return ExpertSpec(**e)


def format_table(report: dict) -> str:
    """Plain-text rendering of the geometric-average relative-error table."""
    columns = report["columns"]
    header = f"{'method':<10}" + "".join(f"{c:>12}" for c in columns)
    lines = [header, "-" * len(header)]
    for m in report["methods"]:
        cells = []
        for j, v in enumerate(report["values"][m]):
            mark = "*" if report["best"][columns[j]] == m else \
                ("!" if v > 1.0 else " ")
            cells.append(f"{v:>11.4f}{mark}")
        lines.append(f"{m:<10}" + "".join(cells))
    lines.append("")
    lines.append(f"benchmark: {report['benchmark']} | loss: {report['loss']} | "
                 "* best in column, ! worse than benchmark")
    return "\n".join(lines) + "\n"
