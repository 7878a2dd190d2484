"""Synthetic multi-zone load scenarios for testing and benchmarking.

Zone truth is level x daily profile x weekly modulation plus noise; the total
series is the exact sum of the zones, so the generated truth is coherent by
construction.  Each expert forecasts every series independently (truth plus
bias plus noise), which makes expert forecasts generically incoherent, like
a real provider's.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .panel import SLOTS_PER_DAY, ForecastSet, Hierarchy, Panel

DEFAULT_WEEKLY = (1.0, 1.0, 1.0, 1.0, 1.0, 0.9, 0.85)  # Mon..Sun


def default_daily_profile() -> np.ndarray:
    """A plausible normalized load shape: night trough, morning and evening peaks."""
    h = np.arange(SLOTS_PER_DAY) / 4.0  # hours 0..23.75
    base = 0.75 + 0.2 * np.exp(-((h - 11.0) / 3.5) ** 2) \
        + 0.25 * np.exp(-((h - 19.5) / 2.5) ** 2) \
        - 0.15 * np.exp(-((h - 4.0) / 3.0) ** 2)
    return base


@dataclass(frozen=True)
class ExpertSpec:
    """One synthetic expert: truth + bias + (optionally zone-correlated) noise.

    ``noise_sd`` is relative to each series' base level; ``rho`` is the
    equicorrelation of the expert's noise across series.
    """

    name: str
    bias: float = 0.0
    noise_sd: float = 0.01
    rho: float = 0.0

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ValueError(f"expert noise stdev must not be negative, got {self.noise_sd}")
        if not -0.99 <= self.rho <= 0.99:
            raise ValueError("rho must be in [-0.99, 0.99]")


@dataclass(frozen=True)
class SynthSpec:
    """Scenario description; same seed reproduces the same panel bit for bit."""

    n_zones: int = 7
    days: int = 180
    first_day: dt.date = dt.date(2024, 1, 1)
    zone_levels: tuple[float, ...] | None = None  # MW, defaults spread over zones
    daily_profile: tuple[float, ...] | None = None  # 96 points
    weekly_modulation: tuple[float, ...] = DEFAULT_WEEKLY
    truth_noise_sd: float = 0.02  # relative to zone level
    truth_rho: float = 0.5  # common-factor correlation of truth noise across zones
    experts: tuple[ExpertSpec, ...] = (ExpertSpec("provider", noise_sd=0.01),)
    total_id: str = "total"
    seed: int = 0

    def __post_init__(self):
        if self.n_zones < 1:
            raise ValueError("need at least one zone")
        if self.days < 2:
            raise ValueError("need at least two days")
        if self.truth_noise_sd < 0:
            raise ValueError("truth noise stdev must not be negative")
        if self.weekly_modulation is not None and len(self.weekly_modulation) != 7:
            raise ValueError("weekly modulation needs 7 factors (Mon..Sun)")

    @property
    def hierarchy(self) -> Hierarchy:
        zones = tuple(f"zone{i + 1}" for i in range(self.n_zones))
        return Hierarchy(self.total_id, zones)

    def levels(self) -> np.ndarray:
        if self.zone_levels is not None:
            lv = np.asarray(self.zone_levels, dtype=float)
            if lv.shape != (self.n_zones,):
                raise ValueError("zone_levels must list one level per zone")
            return lv
        # descending spread around a few GW per zone
        return 4000.0 * (1.0 + np.arange(self.n_zones, dtype=float))[::-1] / self.n_zones

    def profile(self) -> np.ndarray:
        if self.daily_profile is not None:
            pr = np.asarray(self.daily_profile, dtype=float)
            if pr.shape != (SLOTS_PER_DAY,):
                raise ValueError(f"daily profile needs {SLOTS_PER_DAY} points")
            return pr
        return default_daily_profile()


def _correlated_noise(rng: np.random.Generator, shape: tuple, n_series: int,
                      rho: float) -> np.ndarray:
    """Unit-variance noise over axis 0 (series) with equicorrelation rho."""
    idio = rng.standard_normal((n_series,) + shape)
    if rho == 0.0:
        return idio
    common = rng.standard_normal(shape)
    return np.sqrt(abs(rho)) * np.sign(rho) * common + np.sqrt(1.0 - abs(rho)) * idio


def synth_generate(spec: SynthSpec) -> tuple[Panel, ForecastSet, Hierarchy]:
    """Generate a coherent truth panel and per-expert forecasts.

    Series order is zones first, total last.  Expert forecasts cover the same
    days as the panel; callers slice warmup/evaluation ranges themselves.
    """
    rng = np.random.default_rng(spec.seed)
    hierarchy = spec.hierarchy
    levels = spec.levels()
    profile = spec.profile()
    n_b, days = spec.n_zones, spec.days

    dow = np.array([(spec.first_day + dt.timedelta(days=d)).weekday()
                    for d in range(days)])
    weekly = np.asarray(spec.weekly_modulation, dtype=float)[dow]  # (days,)

    shape = profile[None, None, :] * weekly[None, :, None]  # (1, days, 96)
    clean = levels[:, None, None] * shape  # (zones, days, 96)
    noise = _correlated_noise(rng, (days, SLOTS_PER_DAY), n_b, spec.truth_rho)
    zones = clean + spec.truth_noise_sd * levels[:, None, None] * noise
    total = zones.sum(axis=0, keepdims=True)
    truth = np.concatenate([zones, total], axis=0)  # (n, days, 96)

    series_levels = np.concatenate([levels, [levels.sum()]])
    fc = np.empty((n_b + 1, len(spec.experts), days, SLOTS_PER_DAY))
    for j, expert in enumerate(spec.experts):
        noise = _correlated_noise(rng, (days, SLOTS_PER_DAY), n_b + 1, expert.rho)
        fc[:, j] = truth + expert.bias * series_levels[:, None, None] \
            + expert.noise_sd * series_levels[:, None, None] * noise

    panel = Panel(hierarchy.series_ids, spec.first_day, truth)
    forecasts = ForecastSet(hierarchy.series_ids,
                            tuple(e.name for e in spec.experts),
                            spec.first_day, fc)
    return panel, forecasts, hierarchy
