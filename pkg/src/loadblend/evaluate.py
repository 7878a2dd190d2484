"""Accuracy scoring and significance testing for combined forecasts.

Scores are held per (series, horizon, method); the benchmark is one of the
scored columns (typically the provider's own forecast) and relative errors
divide by it.  The Diebold-Mariano machinery works on per-day loss
differentials at a fixed horizon.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import (
    DegenerateBenchmarkError,
    EmptyEvaluationError,
    IncompleteInputError,
)
from .panel import SLOTS_PER_DAY


def mae(errors: np.ndarray, axis: int = 0) -> np.ndarray:
    """Mean absolute error over the day axis; errors may be any shape."""
    errors = np.asarray(errors, dtype=float)
    if errors.shape[axis] == 0:
        raise EmptyEvaluationError("no evaluated days")
    return np.abs(errors).mean(axis=axis)


def mse(errors: np.ndarray, axis: int = 0) -> np.ndarray:
    errors = np.asarray(errors, dtype=float)
    if errors.shape[axis] == 0:
        raise EmptyEvaluationError("no evaluated days")
    return (errors ** 2).mean(axis=axis)


def rmae(mae_method, mae_benchmark):
    """Ratio of a method's MAE to the benchmark's; benchmark must be > 0."""
    num = np.asarray(mae_method, dtype=float)
    den = np.asarray(mae_benchmark, dtype=float)
    if np.any(den <= 0):
        raise DegenerateBenchmarkError("benchmark MAE is zero; ratio undefined")
    return num / den


def ga_rmae(values) -> float:
    """Geometric mean of relative errors over an index set."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptyEvaluationError("empty index set")
    if np.any(v <= 0):
        raise ValueError("geometric mean needs strictly positive inputs")
    return float(np.exp(np.mean(np.log(v))))


@dataclass(frozen=True)
class ScoreTable:
    """Per-(series, horizon, method) accuracy scores.

    ``mae``/``mse`` have shape (n_series, 96, n_methods);
    ``rmae`` divides each method's MAE by the benchmark column.
    """

    series_ids: tuple[str, ...]
    methods: tuple[str, ...]
    benchmark: str
    mae: np.ndarray = field(repr=False)
    mse: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "series_ids", tuple(self.series_ids))
        object.__setattr__(self, "methods", tuple(self.methods))
        shape = (len(self.series_ids), SLOTS_PER_DAY, len(self.methods))
        for name in ("mae", "mse"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.benchmark not in self.methods:
            raise ValueError(f"benchmark {self.benchmark!r} not among methods")

    @property
    def rmae(self) -> np.ndarray:
        bench = self.mae[:, :, self.methods.index(self.benchmark)]
        return rmae(self.mae, bench[:, :, None])

    @property
    def rmse_ratio(self) -> np.ndarray:
        """Squared-loss analogue of rmae (root-MSE ratio)."""
        bench = self.mse[:, :, self.methods.index(self.benchmark)]
        if np.any(bench <= 0):
            raise DegenerateBenchmarkError("benchmark MSE is zero")
        return np.sqrt(self.mse / bench[:, :, None])


@dataclass(frozen=True)
class DmResult:
    statistic: float
    p_value: float
    one_sided: bool
    n_obs: int
    lag_window: int
    degenerate: bool = False


def hac_variance(d: np.ndarray, lag_window: int) -> float:
    """Bartlett-kernel long-run variance of a loss-differential series."""
    d = np.asarray(d, dtype=float)
    q = d.size
    dc = d - d.mean()
    gamma0 = float(dc @ dc) / q
    var = gamma0
    for lag in range(1, min(lag_window, q - 1) + 1):
        weight = 1.0 - lag / (lag_window + 1.0)
        var += 2.0 * weight * float(dc[lag:] @ dc[:-lag]) / q
    return var


def dm_test(errors_a: np.ndarray, errors_b: np.ndarray, *,
            loss: str = "absolute", one_sided: bool = True,
            horizon: int = 1) -> DmResult:
    """Diebold-Mariano test of equal predictive accuracy.

    HAC variance with Bartlett kernel and lag window floor(Q^(1/3)), plus the
    Harvey-Leybourne-Newbold small-sample correction and Student-t reference
    with Q-1 degrees of freedom.  The one-sided p-value is small when method
    ``a`` is more accurate than ``b`` (negative statistic).
    """
    a = np.asarray(errors_a, dtype=float)
    b = np.asarray(errors_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("error series must be 1-d and of equal length")
    q = a.size
    if q < 10:
        raise ValueError(f"need at least 10 observations, got {q}")
    if loss == "absolute":
        d = np.abs(a) - np.abs(b)
    elif loss == "squared":
        d = a ** 2 - b ** 2
    else:
        raise ValueError(f"loss must be 'absolute' or 'squared', got {loss!r}")

    lag_window = int(np.floor(q ** (1.0 / 3.0)))
    dbar = float(d.mean())
    var = hac_variance(d, lag_window)
    if var <= 0:
        if dbar == 0.0:
            return DmResult(0.0, 1.0, one_sided, q, lag_window)
        # constant nonzero differential: one method dominates exactly
        statistic = -np.inf if dbar < 0 else np.inf
        p = 0.0 if (not one_sided or dbar < 0) else 1.0
        return DmResult(float(statistic), p, one_sided, q, lag_window,
                        degenerate=True)

    statistic = dbar / np.sqrt(var / q)
    h = horizon
    correction = np.sqrt((q + 1 - 2 * h + h * (h - 1) / q) / q)
    statistic *= correction
    if one_sided:
        p = float(stats.t.cdf(statistic, df=q - 1))
    else:
        p = float(2.0 * stats.t.sf(abs(statistic), df=q - 1))
    return DmResult(float(statistic), p, one_sided, q, lag_window)


def dm_summary(errors_by_method: dict[str, np.ndarray], *, alpha: float = 0.05,
               loss: str = "absolute", methods: tuple[str, ...] | None = None,
               ) -> tuple[tuple[str, ...], np.ndarray]:
    """Percentage of horizons where the row method significantly beats the column.

    ``errors_by_method`` maps method tag to a (Q days, 96 horizons) error
    array for one series.  Cell (a, b) counts horizons with one-sided
    p-value(a beats b) below alpha, as an integer percentage of 96; the
    diagonal is -1 (undefined).
    """
    tags = tuple(methods) if methods is not None else tuple(errors_by_method)
    missing = [t for t in tags if t not in errors_by_method]
    if missing:
        raise IncompleteInputError(f"missing error series for {missing}")
    n_h = None
    for t in tags:
        arr = np.asarray(errors_by_method[t])
        if arr.ndim != 2:
            raise ValueError("each error array must be (days, horizons)")
        n_h = arr.shape[1] if n_h is None else n_h
        if arr.shape[1] != n_h:
            raise IncompleteInputError("methods disagree on horizon count")
    out = np.full((len(tags), len(tags)), -1, dtype=int)
    for ia, ta in enumerate(tags):
        for ib, tb in enumerate(tags):
            if ia == ib:
                continue
            wins = 0
            for h in range(n_h):
                res = dm_test(errors_by_method[ta][:, h],
                              errors_by_method[tb][:, h],
                              loss=loss, one_sided=True)
                if res.p_value < alpha:
                    wins += 1
            out[ia, ib] = int(round(100.0 * wins / n_h))
    return tags, out


@dataclass(frozen=True)
class BoxplotStats:
    method: str
    low_whisker: float
    q1: float
    median: float
    q3: float
    high_whisker: float
    outliers: tuple[float, ...]


def boxplot_data(values_by_method: dict[str, np.ndarray]) -> list[BoxplotStats]:
    """Tukey five-number summaries with 1.5*IQR whiskers, one per method."""
    out = []
    for method, values in values_by_method.items():
        v = np.sort(np.asarray(values, dtype=float).ravel())
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        iqr = q3 - q1
        lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
        inside = v[(v >= lo_fence) & (v <= hi_fence)]
        outliers = tuple(float(x) for x in v[(v < lo_fence) | (v > hi_fence)])
        out.append(BoxplotStats(method, float(inside[0]), float(q1), float(med),
                                float(q3), float(inside[-1]), outliers))
    return out


def table_report(scores: ScoreTable, hierarchy_total: str,
                 methods: tuple[str, ...] | None = None,
                 use_mse: bool = False) -> dict:
    """Geometric-average relative-error table with per-series, zone and
    overall aggregates, plus best/worse-than-benchmark flags.

    Columns: the total series, each zone, 'BZ' (all zones pooled over
    horizons) and 'All' (every series pooled).  Rows: the scored methods,
    benchmark excluded.
    """
    ratio = scores.rmse_ratio if use_mse else scores.rmae
    tags = tuple(methods) if methods is not None else tuple(
        m for m in scores.methods if m != scores.benchmark)
    missing = [m for m in tags if m not in scores.methods]
    if missing:
        raise IncompleteInputError(f"scores missing methods {missing}")
    if hierarchy_total not in scores.series_ids:
        raise IncompleteInputError(f"series {hierarchy_total!r} not scored")
    total_idx = scores.series_ids.index(hierarchy_total)
    zone_idx = [i for i in range(len(scores.series_ids)) if i != total_idx]
    columns = [scores.series_ids[total_idx]] + \
        [scores.series_ids[i] for i in zone_idx] + ["BZ", "All"]
    rows = {}
    for m in tags:
        k = scores.methods.index(m)
        per_series = [ga_rmae(ratio[total_idx, :, k])] + \
            [ga_rmae(ratio[i, :, k]) for i in zone_idx]
        bz = ga_rmae(ratio[zone_idx, :, k])
        everything = ga_rmae(ratio[:, :, k])
        rows[m] = per_series + [bz, everything]
    values = np.array([rows[m] for m in tags])
    best = values.argmin(axis=0)
    return {
        "columns": columns,
        "methods": list(tags),
        "values": {m: [float(x) for x in rows[m]] for m in tags},
        "best": {columns[j]: tags[best[j]] for j in range(len(columns))},
        "worse_than_benchmark": {
            m: [bool(x > 1.0) for x in rows[m]] for m in tags},
        "loss": "mse" if use_mse else "mae",
        "benchmark": scores.benchmark,
    }
