"""Daily-random-walk naive expert: tomorrow's forecast is today's observation."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientHistoryError
from .panel import ForecastSet, Panel

DRW_EXPERT_ID = "drw"


@dataclass(frozen=True)
class DrwForecast:
    """One day of naive forecasts, shape (series, 96) in MW."""

    origin_day: dt.date
    series_ids: tuple[str, ...]
    values: np.ndarray = field(repr=False)


def drw_forecast(panel: Panel, target_day: dt.date) -> DrwForecast:
    """Copy the previous day's observed profile as the forecast for target_day."""
    source_day = target_day - dt.timedelta(days=1)
    try:
        values = panel.day_values(source_day).copy()
    except InsufficientHistoryError:
        raise InsufficientHistoryError(
            f"drw forecast for {target_day} needs observations for {source_day}",
            first_missing_day=source_day,
        ) from None
    return DrwForecast(target_day, panel.series_ids, values)


def drw_forecast_range(panel: Panel, first_day: dt.date, n_days: int) -> np.ndarray:
    """Naive forecasts for n_days consecutive days, shape (series, day, 96)."""
    days = [first_day + dt.timedelta(days=k) for k in range(n_days)]
    return np.stack([drw_forecast(panel, d).values for d in days], axis=1)


def add_drw_expert(panel: Panel, forecasts: ForecastSet,
                   expert_id: str = DRW_EXPERT_ID) -> ForecastSet:
    """Append the naive expert to a forecast set, aligned day by day.

    Requires panel coverage of the day before every forecast day.
    """
    values = drw_forecast_range(panel, forecasts.first_day, forecasts.n_days)
    return forecasts.with_expert(expert_id, values)
