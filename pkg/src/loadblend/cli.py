"""Command-line entry point.

Subcommands: ``ingest`` (provider CSV -> canonical store), ``synth``
(generate a scenario), ``run`` (rolling experiment from a config file),
``report`` (tables/plot data from a result store), ``dm`` (pairwise tests
from a result store).  Failures exit nonzero with one machine-readable
JSON error line on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from .errors import IncompleteInputError, LoadBlendError
from .evaluate import SLOTS_PER_DAY, ScoreTable, dm_summary, table_report
from .experiment import (
    ExperimentConfig,
    config_from_dict,
    export_results,
    format_table,
    rolling_run,
)
from .ingest import ColumnMapping, parse_load_csv, write_canonical_csv
from .synth import SynthSpec, synth_generate


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loadblend",
        description="Combine multi-zone load forecasts and evaluate them.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ing = sub.add_parser("ingest", help="normalize a provider CSV")
    p_ing.add_argument("input")
    p_ing.add_argument("--out", required=True, help="canonical CSV to write")
    p_ing.add_argument("--timestamp-col", default="timestamp")
    p_ing.add_argument("--zone-col", default="zone")
    p_ing.add_argument("--actual-col", default="actual_mw")
    p_ing.add_argument("--forecast-col", default="forecast_mw")
    p_ing.add_argument("--timezone", default=None,
                       help="convert to this zone's wall time (default: as written)")

    p_syn = sub.add_parser("synth", help="generate a synthetic scenario")
    p_syn.add_argument("--zones", type=int, default=7)
    p_syn.add_argument("--days", type=int, default=180)
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.add_argument("--out", required=True, help="output directory")

    p_run = sub.add_parser("run", help="rolling-origin experiment")
    p_run.add_argument("config", help="YAML experiment config")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--window-days", type=int, default=None)
    p_run.add_argument("--zero-pattern",
                       choices=["none", "cross-both", "cross-variable"],
                       default=None)
    p_run.add_argument("--lambda", dest="shrinkage", default=None,
                       help="'auto' or a fixed value in [0,1]")
    p_run.add_argument("--out", default=None, help="override output directory")

    p_rep = sub.add_parser("report", help="re-emit tables from a result store")
    p_rep.add_argument("results", help="directory written by `run`")

    p_dm = sub.add_parser("dm", help="pairwise DM tests from a result store")
    p_dm.add_argument("results", help="directory written by `run`")
    p_dm.add_argument("--series", default=None, help="series id (default: total)")
    p_dm.add_argument("--alpha", type=float, default=0.05)
    p_dm.add_argument("--loss", choices=["absolute", "squared"], default="absolute")
    return parser


def cmd_ingest(args) -> int:
    mapping = ColumnMapping(timestamp=args.timestamp_col, zone=args.zone_col,
                            actual=args.actual_col, forecast=args.forecast_col)
    panel, forecasts = parse_load_csv(args.input, mapping, timezone=args.timezone)
    write_canonical_csv(args.out, panel, forecasts)
    what = [w for w, v in (("actuals", panel), ("forecasts", forecasts)) if v is not None]
    print(f"wrote {args.out} ({' + '.join(what)})")
    return 0


def cmd_synth(args) -> int:
    spec = SynthSpec(n_zones=args.zones, days=args.days, seed=args.seed)
    panel, forecasts, _ = synth_generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_canonical_csv(out / "actuals.csv", panel=panel)
    for expert in forecasts.expert_ids:
        write_canonical_csv(out / f"forecast_{expert}.csv", forecasts=forecasts,
                            expert_id=expert)
    (out / "synth_spec.json").write_text(json.dumps(
        dataclasses.asdict(spec), default=str, indent=2, sort_keys=True) + "\n")
    print(f"wrote synthetic scenario to {out}")
    return 0


def cmd_run(args) -> int:
    doc = yaml.safe_load(Path(args.config).read_text()) or {}
    config = config_from_dict(doc)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
        if config.synth is not None:
            config = dataclasses.replace(
                config, synth=dataclasses.replace(config.synth, seed=args.seed))
    if args.window_days is not None:
        overrides["window_days"] = args.window_days
    if args.zero_pattern is not None:
        overrides["zero_pattern"] = args.zero_pattern.replace("-", "_")
    if args.shrinkage is not None:
        overrides["shrinkage"] = (
            "auto" if args.shrinkage == "auto" else float(args.shrinkage))
    if args.out is not None:
        overrides["output_dir"] = args.out
    if overrides:
        config = dataclasses.replace(config, **overrides)
    store = rolling_run(config)
    out = export_results(store)
    print(format_table(store.report))
    print(f"results written to {out}")
    return 0


def _load_store_scores(results: Path):
    manifest = json.loads((results / "manifest.json").read_text())
    methods = tuple(manifest["methods"])
    series = tuple(manifest["series"])
    actuals = np.load(results / "actuals.npy")
    errors = {}
    for m in methods:
        fc = np.load(results / f"forecasts_{m}.npy")
        errors[m] = fc - actuals
    return manifest, series, methods, errors


def cmd_report(args) -> int:
    results = Path(args.results)
    manifest, series, methods, errors = _load_store_scores(results)
    mae_arr = np.stack([np.abs(errors[m]).mean(axis=1) for m in methods], axis=-1)
    mse_arr = np.stack([(errors[m] ** 2).mean(axis=1) for m in methods], axis=-1)
    bench = manifest["config"]["benchmark"]
    scores = ScoreTable(series, methods, bench, mae_arr, mse_arr)
    total = manifest["config"]["total_id"]
    print(format_table(table_report(scores, total)))
    return 0


def cmd_dm(args) -> int:
    results = Path(args.results)
    manifest, series, methods, errors = _load_store_scores(results)
    sid = args.series or manifest["config"]["total_id"]
    if sid not in series:
        raise IncompleteInputError(f"series {sid!r} not in result store")
    si = series.index(sid)
    per_day = {m: errors[m][si].reshape(-1, SLOTS_PER_DAY) for m in methods}
    tags, matrix = dm_summary(per_day, alpha=args.alpha, loss=args.loss,
                              methods=methods)
    width = max(len(t) for t in tags) + 2
    print(f"one-sided DM rejections (% of horizons, alpha={args.alpha}, "
          f"loss={args.loss}) for {sid}:")
    print(" " * width + "".join(f"{t:>{width}}" for t in tags))
    for i, t in enumerate(tags):
        cells = "".join(
            f"{'.' if i == j else matrix[i, j]:>{width}}" for j in range(len(tags)))
        print(f"{t:>{width}}" + cells)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    handler = {
        "ingest": cmd_ingest,
        "synth": cmd_synth,
        "run": cmd_run,
        "report": cmd_report,
        "dm": cmd_dm,
    }[args.command]
    try:
        return handler(args)
    except (LoadBlendError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
