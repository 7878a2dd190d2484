"""CSV ingestion to dense panels, including daylight-saving normalization.

Canonical long schema: ``timestamp`` (ISO-8601, offset allowed), ``zone``,
``actual_mw`` and optionally ``forecast_mw``.  A column mapping adapts other
provider exports.  Every day is normalized to exactly 96 quarter-hour slots:
the four slots lost to a spring-forward day are linearly interpolated and the
four duplicated by a fall-back day are averaged, each with a log line.
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import MissingDataError, SchemaError
from .panel import SLOTS_PER_DAY, ForecastSet, Panel

log = logging.getLogger(__name__)

CANONICAL_COLUMNS = {
    "timestamp": "timestamp",
    "zone": "zone",
    "actual": "actual_mw",
    "forecast": "forecast_mw",
}


@dataclass(frozen=True)
class ColumnMapping:
    timestamp: str = "timestamp"
    zone: str = "zone"
    actual: str | None = "actual_mw"
    forecast: str | None = "forecast_mw"


def _wall_time(series: pd.Series, timezone: str | None) -> pd.Series:
    """Civil (wall-clock) timestamps per the timezone policy.

    ``timezone=None`` keeps each timestamp's own wall time (offset dropped);
    a zone name converts everything into that zone's local time first.
    """
    parsed = pd.to_datetime(series, utc=True, format="ISO8601")
    if timezone is not None:
        return parsed.dt.tz_convert(timezone).dt.tz_localize(None)
    # reparse without offset to recover the literal wall time
    stripped = series.astype(str).str.replace(
        r"(Z|[+-]\d{2}:?\d{2})$", "", regex=True)
    return pd.to_datetime(stripped, format="ISO8601")


def _to_dense(df: pd.DataFrame, value_col: str) -> tuple[list, dt.date, np.ndarray]:
    """Long (zone, day, slot, value) rows -> dense (zone, day, 96) array."""
    zones = sorted(df["zone"].unique())
    first_day, last_day = df["day"].min(), df["day"].max()
    n_days = (last_day - first_day).days + 1
    dense = np.full((len(zones), n_days, SLOTS_PER_DAY), np.nan)
    zidx = {z: i for i, z in enumerate(zones)}
    didx = (df["day"] - first_day).map(lambda d: d.days).to_numpy()
    dense[df["zone"].map(zidx).to_numpy(), didx, df["slot"].to_numpy()] = \
        df[value_col].to_numpy(dtype=float)
    _normalize_days(dense, zones, first_day)
    return zones, first_day, dense


def _normalize_days(dense: np.ndarray, zones: list, first_day: dt.date) -> None:
    """Interpolate DST-sized gaps in place; report anything else."""
    missing_cells = []
    for zi, z in enumerate(zones):
        for di in range(dense.shape[1]):
            day = first_day + dt.timedelta(days=di)
            row = dense[zi, di]
            holes = np.flatnonzero(np.isnan(row))
            if holes.size == 0:
                continue
            contiguous = holes.size == holes[-1] - holes[0] + 1
            interior = holes[0] > 0 and holes[-1] < SLOTS_PER_DAY - 1
            if holes.size == 4 and contiguous and interior:
                lo, hi = holes[0] - 1, holes[-1] + 1
                frac = (holes - lo) / (hi - lo)
                row[holes] = row[lo] + frac * (row[hi] - row[lo])
                log.info("interpolated DST gap: zone=%s day=%s slots=%s-%s",
                         z, day, holes[0] + 1, holes[-1] + 1)
            else:
                missing_cells.extend((z, day, int(s) + 1) for s in holes)
    if missing_cells:
        z, day, slot = missing_cells[0]
        raise MissingDataError(
            f"missing data after normalization, first at zone={z} day={day} "
            f"slot={slot} ({len(missing_cells)} cells total)", missing_cells)


def parse_load_csv(path, mapping: ColumnMapping | None = None,
                   timezone: str | None = None,
                   expert_id: str = "provider",
                   ) -> tuple[Panel | None, ForecastSet | None]:
    """Parse a long CSV into a dense Panel and/or single-expert ForecastSet.

    Exact duplicate (zone, timestamp) rows are dropped last-wins; rows that
    collide on wall time after normalization (the fall-back hour) are
    averaged.  Returns (panel, forecasts); either may be None when the
    corresponding column is unmapped or absent.
    """
    mapping = mapping or ColumnMapping()
    raw = pd.read_csv(path, float_precision="round_trip")
    for attr in ("timestamp", "zone"):
        col = getattr(mapping, attr)
        if col not in raw.columns:
            raise SchemaError(f"required column {col!r} ({attr}) not in {path}")
    value_cols = {}
    for attr in ("actual", "forecast"):
        col = getattr(mapping, attr)
        if col is not None and col in raw.columns:
            value_cols[attr] = col
    if not value_cols:
        raise SchemaError(f"no actual/forecast value column found in {path}")

    df = raw.rename(columns={mapping.timestamp: "_ts", mapping.zone: "zone"})
    before = len(df)
    df = df.drop_duplicates(subset=["zone", "_ts"], keep="last")
    if len(df) < before:
        log.info("dropped %d duplicate rows (last wins)", before - len(df))
    wall = _wall_time(df["_ts"], timezone)
    df = df.assign(day=wall.dt.date,
                   slot=(wall.dt.hour * 4 + wall.dt.minute // 15).astype(int))
    bad = df["slot"].ge(SLOTS_PER_DAY) | df["slot"].lt(0)
    if bad.any():
        raise SchemaError("timestamps not aligned to the quarter-hour grid")

    # fall-back duplicates collide on (zone, day, slot): average them
    agg = df.groupby(["zone", "day", "slot"], as_index=False)[
        list(value_cols.values())].mean()
    n_dup = len(df) - len(agg)
    if n_dup:
        log.info("averaged %d fall-back duplicate slots", n_dup)

    panel = forecasts = None
    if "actual" in value_cols:
        zones, first_day, dense = _to_dense(agg, value_cols["actual"])
        panel = Panel(zones, first_day, dense)
    if "forecast" in value_cols:
        zones, first_day, dense = _to_dense(agg, value_cols["forecast"])
        forecasts = ForecastSet(zones, (expert_id,), first_day, dense[:, None])
    return panel, forecasts


def write_canonical_csv(path, panel: Panel | None = None,
                        forecasts: ForecastSet | None = None,
                        expert_id: str | None = None) -> None:
    """Export a Panel and/or one expert of a ForecastSet in the canonical schema."""
    source = panel if panel is not None else forecasts
    if source is None:
        raise ValueError("need a panel or a forecast set to export")
    if panel is not None and forecasts is not None:
        if panel.series_ids != forecasts.series_ids or panel.first_day != forecasts.first_day:
            raise ValueError("panel and forecasts must be aligned for joint export")
    rows = []
    n_days = source.n_days
    for si, zone in enumerate(source.series_ids):
        for di in range(n_days):
            day = source.first_day + dt.timedelta(days=di)
            for slot in range(SLOTS_PER_DAY):
                ts = dt.datetime.combine(day, dt.time(slot // 4, (slot % 4) * 15))
                row = {"timestamp": ts.isoformat(), "zone": zone}
                if panel is not None:
                    row["actual_mw"] = repr(float(panel.values[si, di, slot]))
                if forecasts is not None:
                    j = (forecasts.expert_ids.index(expert_id)
                         if expert_id else 0)
                    row["forecast_mw"] = repr(float(forecasts.values[si, j, di, slot]))
                rows.append(row)
    pd.DataFrame(rows).to_csv(path, index=False)
