"""Data model for 15-minute multi-zone load panels.

A day always has exactly ``SLOTS_PER_DAY = 96`` quarter-hour slots; daylight
saving irregularities are resolved at ingestion, never here.  All containers
are frozen after construction and every function in this module is pure.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientHistoryError

SLOTS_PER_DAY = 96


@dataclass(frozen=True)
class TimeIndex:
    """A (day, slot) pair; slot is the quarter-hour position 1..96."""

    day: dt.date
    slot: int

    def __post_init__(self):
        if not 1 <= self.slot <= SLOTS_PER_DAY:
            raise ValueError(f"slot must be in 1..{SLOTS_PER_DAY}, got {self.slot}")


@dataclass(frozen=True)
class Hierarchy:
    """One total series whose value equals the sum of the bottom series."""

    total_id: str
    bottom_ids: tuple[str, ...]

    def __post_init__(self):
        bottoms = tuple(self.bottom_ids)
        object.__setattr__(self, "bottom_ids", bottoms)
        if not bottoms:
            raise ValueError("hierarchy needs at least one bottom series")
        if len(set(bottoms)) != len(bottoms):
            raise ValueError("duplicate bottom series ids")
        if self.total_id in bottoms:
            raise ValueError("total series cannot also be a bottom series")

    @property
    def n(self) -> int:
        return len(self.bottom_ids) + 1

    @property
    def series_ids(self) -> tuple[str, ...]:
        """Canonical variable order: bottoms first, total last."""
        return self.bottom_ids + (self.total_id,)

    def indices(self, series_ids) -> tuple[int, list[int]]:
        """Locate (total index, bottom indices) within an ordered id list."""
        ids = list(series_ids)
        try:
            total = ids.index(self.total_id)
            bottoms = [ids.index(b) for b in self.bottom_ids]
        except ValueError as exc:
            raise ValueError(f"hierarchy series missing from panel: {exc}") from None
        return total, bottoms


def _day_offset(first_day: dt.date, day: dt.date) -> int:
    return (day - first_day).days


@dataclass(frozen=True)
class Panel:
    """Dense actual-load observations, shape ``(series, day, slot)`` in MW."""

    series_ids: tuple[str, ...]
    first_day: dt.date
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "series_ids", tuple(self.series_ids))
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 3 or vals.shape[2] != SLOTS_PER_DAY:
            raise ValueError(f"panel values must be (series, day, {SLOTS_PER_DAY})")
        if vals.shape[0] != len(self.series_ids):
            raise ValueError("series axis does not match series_ids")
        if not np.all(np.isfinite(vals)):
            raise ValueError("panel contains non-finite values")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def n_series(self) -> int:
        return len(self.series_ids)

    @property
    def n_days(self) -> int:
        return self.values.shape[1]

    @property
    def last_day(self) -> dt.date:
        return self.first_day + dt.timedelta(days=self.n_days - 1)

    def day_index(self, day: dt.date) -> int:
        idx = _day_offset(self.first_day, day)
        if not 0 <= idx < self.n_days:
            raise InsufficientHistoryError(
                f"day {day} outside panel range {self.first_day}..{self.last_day}",
                first_missing_day=day,
            )
        return idx

    def day_values(self, day: dt.date) -> np.ndarray:
        """Values for one day, shape (series, 96)."""
        return self.values[:, self.day_index(day), :]


@dataclass(frozen=True)
class ForecastSet:
    """Base forecasts, shape ``(series, expert, day, slot)`` in MW.

    Shares series ordering and date alignment with its companion Panel.
    """

    series_ids: tuple[str, ...]
    expert_ids: tuple[str, ...]
    first_day: dt.date
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "series_ids", tuple(self.series_ids))
        object.__setattr__(self, "expert_ids", tuple(self.expert_ids))
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 4 or vals.shape[3] != SLOTS_PER_DAY:
            raise ValueError(f"forecast values must be (series, expert, day, {SLOTS_PER_DAY})")
        if vals.shape[0] != len(self.series_ids) or vals.shape[1] != len(self.expert_ids):
            raise ValueError("value axes do not match series/expert ids")
        if not np.all(np.isfinite(vals)):
            raise ValueError("forecasts contain non-finite values")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def n_experts(self) -> int:
        return len(self.expert_ids)

    @property
    def n_days(self) -> int:
        return self.values.shape[2]

    @property
    def last_day(self) -> dt.date:
        return self.first_day + dt.timedelta(days=self.n_days - 1)

    def day_index(self, day: dt.date) -> int:
        idx = _day_offset(self.first_day, day)
        if not 0 <= idx < self.n_days:
            raise InsufficientHistoryError(
                f"day {day} outside forecast range {self.first_day}..{self.last_day}",
                first_missing_day=day,
            )
        return idx

    def day_values(self, day: dt.date) -> np.ndarray:
        """Forecasts for one day, shape (series, expert, 96)."""
        return self.values[:, :, self.day_index(day), :]

    def with_expert(self, expert_id: str, values: np.ndarray) -> "ForecastSet":
        """Return a copy with one extra expert appended (values: series×day×96)."""
        if expert_id in self.expert_ids:
            raise ValueError(f"expert {expert_id!r} already present")
        stacked = np.concatenate([self.values, values[:, None, :, :]], axis=1)
        return ForecastSet(self.series_ids, self.expert_ids + (expert_id,),
                           self.first_day, stacked)


@dataclass(frozen=True)
class ErrorPanel:
    """Forecast-minus-actual errors, shape ``(series, expert, day, slot)`` in MW."""

    series_ids: tuple[str, ...]
    expert_ids: tuple[str, ...]
    first_day: dt.date
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "series_ids", tuple(self.series_ids))
        object.__setattr__(self, "expert_ids", tuple(self.expert_ids))
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 4 or vals.shape[3] != SLOTS_PER_DAY:
            raise ValueError("error values must be (series, expert, day, 96)")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def n_days(self) -> int:
        return self.values.shape[2]


def build_stacking_matrix(n: int, p: int) -> np.ndarray:
    """The 0/1 design matrix stacking p copies of the n-variate identity.

    Shape (n*p, n); row blocks are experts, so row j*n+i selects variable i
    of expert j.  Column sums equal p, row sums equal 1.
    """
    if n < 1 or p < 1:
        raise ValueError(f"n and p must be positive, got n={n}, p={p}")
    return np.kron(np.ones((p, 1), dtype=int), np.eye(n, dtype=int)).astype(float)


def coherency_gap(values: np.ndarray, hierarchy: Hierarchy,
                  series_ids=None) -> float:
    """Absolute mismatch |total - sum(bottoms)| for one variable vector.

    ``values`` may be an n-vector or an (n, k) array; the gap is then the
    maximum over the trailing axis.
    """
    ids = hierarchy.series_ids if series_ids is None else tuple(series_ids)
    values = np.asarray(values, dtype=float)
    if values.shape[0] != len(ids):
        raise ValueError(
            f"got {values.shape[0]} values for {len(ids)} series")
    total_idx, bottom_idx = hierarchy.indices(ids)
    gap = np.abs(values[total_idx] - values[bottom_idx].sum(axis=0))
    return float(np.max(gap))


def validation_window(panel: Panel, forecasts: ForecastSet, origin_day: dt.date,
                      window_days: int) -> ErrorPanel:
    """Forecast errors over the ``window_days`` days strictly before origin_day.

    Each day contributes 96 samples per (series, expert).  Raises
    InsufficientHistoryError naming the first missing day when the panel or
    forecast set does not reach back far enough.
    """
    if window_days < 1:
        raise ValueError("window_days must be >= 1")
    if panel.series_ids != forecasts.series_ids:
        raise ValueError("panel and forecasts disagree on series ordering")
    first_needed = origin_day - dt.timedelta(days=window_days)
    last_needed = origin_day - dt.timedelta(days=1)
    for source in (panel, forecasts):
        if first_needed < source.first_day:
            raise InsufficientHistoryError(
                f"window needs {first_needed} but data starts {source.first_day}",
                first_missing_day=first_needed,
            )
        if last_needed > source.last_day:
            raise InsufficientHistoryError(
                f"window needs {last_needed} but data ends {source.last_day}",
                first_missing_day=source.last_day + dt.timedelta(days=1),
            )
    p0, p1 = panel.day_index(first_needed), panel.day_index(last_needed)
    f0, f1 = forecasts.day_index(first_needed), forecasts.day_index(last_needed)
    actual = panel.values[:, None, p0:p1 + 1, :]
    fc = forecasts.values[:, :, f0:f1 + 1, :]
    return ErrorPanel(panel.series_ids, forecasts.expert_ids, first_needed,
                      fc - actual)


def flatten_errors(errors: ErrorPanel) -> np.ndarray:
    """Reshape an ErrorPanel to a (T, m) sample matrix, T = days*96, m = n*p.

    Column order is expert-major: columns 0..n-1 hold expert 1's variables in
    series order, the next n columns expert 2's, and so on.  Rows run in
    chronological order.
    """
    n, p, d, s = errors.values.shape
    # (expert, day, slot, series) -> rows over (day, slot), cols over (expert, series)
    by_time = errors.values.transpose(2, 3, 1, 0).reshape(d * s, p * n)
    return by_time
