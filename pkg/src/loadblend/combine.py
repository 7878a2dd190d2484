"""The seven forecasting procedures: drw pass-through, equal weights, the two
local single-task combiners, the two combine-then-reconcile variants, and the
global multi-task GLS combiner, plus the bottom-up coherency step."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .covariance import ZeroPattern, ensure_pd, estimate_covariance, sample_cov
from .errors import DegenerateVarianceError, SingularCovarianceError
from .naive import DRW_EXPERT_ID
from .panel import (
    ErrorPanel,
    ForecastSet,
    Hierarchy,
    Panel,
    build_stacking_matrix,
    coherency_gap,
    flatten_errors,
    validation_window,
)

METHODS = ("drw", "ew", "lw_var", "lw_cov", "scr_var", "scr_cov", "gw")


@dataclass(frozen=True)
class CombinationWeights:
    """The m x n weight matrix mapping stacked base forecasts to combined ones."""

    omega: np.ndarray = field(repr=False)
    n: int
    p: int
    method: str = "gw"
    origin_day: dt.date | None = None

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        if om.shape != (self.n * self.p, self.n):
            raise ValueError(f"omega must be {self.n * self.p}x{self.n}, got {om.shape}")
        om.flags.writeable = False
        object.__setattr__(self, "omega", om)

    def apply(self, stacked: np.ndarray) -> np.ndarray:
        """Combine stacked forecasts: an m-vector or (m, k) array -> n or (n, k)."""
        stacked = np.asarray(stacked, dtype=float)
        if stacked.shape[0] != self.n * self.p:
            raise ValueError(
                f"expected {self.n * self.p} stacked forecasts, got {stacked.shape[0]}")
        return self.omega.T @ stacked


@dataclass(frozen=True)
class CombinedForecast:
    """One method's 96-slot forecast for one origin day."""

    method: str
    origin_day: dt.date
    series_ids: tuple[str, ...]
    values: np.ndarray = field(repr=False)
    coherent: bool = False


def ew_combine(forecasts: np.ndarray) -> np.ndarray:
    """Arithmetic mean across experts; input (..., p) or (series, expert, ...)."""
    forecasts = np.asarray(forecasts, dtype=float)
    return forecasts.mean(axis=1) if forecasts.ndim >= 2 else forecasts


def lw_var_weights(error_variances: np.ndarray) -> np.ndarray:
    """Inverse-variance weights for one variable; sum to 1, all in (0, 1)."""
    v = np.asarray(error_variances, dtype=float)
    if np.any(v <= 0):
        raise DegenerateVarianceError(f"nonpositive error variance in {v}")
    inv = 1.0 / v
    return inv / inv.sum()


def lw_cov_weights(sigma: np.ndarray) -> np.ndarray:
    """Minimum-variance weights inv(Sigma) 1 / (1' inv(Sigma) 1) for one variable.

    Weights sum to 1 and may be negative.
    """
    sigma = np.asarray(sigma, dtype=float)
    ones = np.ones(sigma.shape[0])
    try:
        cho = linalg.cho_factor(sigma, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularCovarianceError(f"per-variable covariance not p.d.: {exc}") from None
    x = linalg.cho_solve(cho, ones)
    return x / (ones @ x)


def gw_weights(w: np.ndarray, k: np.ndarray, *, method: str = "gw",
               origin_day: dt.date | None = None) -> CombinationWeights:
    """GLS combination weights Omega = W^-1 K (K' W^-1 K)^-1.

    Solves the stacked regression min (yhat - K y)' W^-1 (yhat - K y);
    satisfies Omega' K = I exactly up to numerical error.
    """
    w = np.asarray(w, dtype=float)
    k = np.asarray(k, dtype=float)
    m, n = k.shape
    if w.shape != (m, m):
        raise ValueError(f"W must be {m}x{m} to match K, got {w.shape}")
    p = m // n
    try:
        cho = linalg.cho_factor(w, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularCovarianceError(f"W is not positive definite: {exc}") from None
    winv_k = linalg.cho_solve(cho, k)
    w_c = linalg.inv(k.T @ winv_k)
    return CombinationWeights(winv_k @ w_c, n=n, p=p, method=method,
                              origin_day=origin_day)


def combined_covariance(w: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Error covariance (K' W^-1 K)^-1 of the GLS-combined forecast."""
    w = np.asarray(w, dtype=float)
    k = np.asarray(k, dtype=float)
    cho = linalg.cho_factor(w, lower=True)
    out = linalg.inv(k.T @ linalg.cho_solve(cho, k))
    return (out + out.T) / 2.0


def bottom_up_total(values: np.ndarray, hierarchy: Hierarchy,
                    series_ids) -> np.ndarray:
    """Overwrite the total series with the sum of the bottom series."""
    total_idx, bottom_idx = hierarchy.indices(series_ids)
    out = np.array(values, dtype=float)
    out[total_idx] = out[bottom_idx].sum(axis=0)
    return out


def gw_combine(weights: CombinationWeights, stacked_forecasts: np.ndarray,
               hierarchy: Hierarchy, series_ids) -> np.ndarray:
    """Apply GLS weights then impose coherency bottom-up.

    ``stacked_forecasts`` is an m-vector or (m, k) array in expert-major
    order; output is the coherent (n,) or (n, k) combined forecast.
    """
    combined = weights.apply(stacked_forecasts)
    return bottom_up_total(combined, hierarchy, series_ids)


def stack_forecasts(day_forecasts: np.ndarray) -> np.ndarray:
    """(series, expert, ...) -> expert-major stacked (expert*series, ...)."""
    fc = np.asarray(day_forecasts, dtype=float)
    n, p = fc.shape[:2]
    return fc.transpose(1, 0, *range(2, fc.ndim)).reshape(p * n, *fc.shape[2:])


def per_variable_error_covariances(samples: np.ndarray, n: int, p: int,
                                   center: bool = False) -> np.ndarray:
    """Slice a (T, m) expert-major sample matrix into n per-variable p x p covs."""
    s = sample_cov(samples, center=center)
    covs = np.empty((n, p, p))
    for i in range(n):
        idx = i + n * np.arange(p)
        covs[i] = s[np.ix_(idx, idx)]
    return covs


def local_weights(samples: np.ndarray, n: int, p: int, mode: str,
                  center: bool = False, floor_ratio: float = 1e-8) -> np.ndarray:
    """Per-variable combination weights, shape (n, p), for lw_var or lw_cov."""
    covs = per_variable_error_covariances(samples, n, p, center=center)
    weights = np.empty((n, p))
    for i in range(n):
        if mode == "var":
            v = np.diag(covs[i]).copy()
            if v.max() <= 0:
                # perfect experts: any convex weights reproduce the truth
                weights[i] = np.full(p, 1.0 / p)
                continue
            v = np.maximum(v, floor_ratio * v.max())
            weights[i] = lw_var_weights(v)
        elif mode == "cov":
            try:
                weights[i] = lw_cov_weights(covs[i])
            except SingularCovarianceError:
                weights[i] = lw_cov_weights(ensure_pd(covs[i], floor_ratio))
        else:
            raise ValueError(f"mode must be 'var' or 'cov', got {mode!r}")
    return weights


def local_combine(day_forecasts: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Apply per-variable weights: (series, expert, ...) x (n, p) -> (series, ...)."""
    fc = np.asarray(day_forecasts, dtype=float)
    w = np.asarray(weights, dtype=float)
    return np.einsum("ij,ij...->i...", w, fc)


def reconcile_projection(values: np.ndarray, hierarchy: Hierarchy, series_ids,
                         w_r: np.ndarray) -> np.ndarray:
    """Oblique projection onto the coherent subspace total = sum(bottoms).

    y~ = y - W_r a' (a W_r a')^-1 a y  with constraint row a having +1 on the
    total and -1 on each bottom.  Coherent inputs are fixed points; scaling
    W_r by a positive constant leaves the output unchanged.
    """
    values = np.asarray(values, dtype=float)
    w_r = np.asarray(w_r, dtype=float)
    ids = tuple(series_ids)
    n = len(ids)
    if values.shape[0] != n or w_r.shape != (n, n):
        raise ValueError("values, series_ids and W_r disagree on dimension")
    total_idx, bottom_idx = hierarchy.indices(ids)
    a = np.zeros(n)
    a[total_idx] = 1.0
    a[bottom_idx] = -1.0
    denom = float(a @ w_r @ a)
    if denom <= 0:
        raise SingularCovarianceError("a W_r a' must be positive")
    gain = (w_r @ a) / denom
    residual = np.tensordot(a, values, axes=(0, 0))
    return values - np.multiply.outer(gain, residual)


def scr_reconciliation_cov(samples: np.ndarray, weights: np.ndarray, n: int,
                           p: int, mode: str, center: bool = False,
                           floor_ratio: float = 1e-8) -> np.ndarray:
    """Reconciliation covariance from locally-combined validation errors.

    mode 'var' keeps only the combined-error variances (diagonal); mode 'cov'
    uses the shrunk full n x n covariance, repaired to p.d.
    """
    t = samples.shape[0]
    combined = np.empty((t, n))
    for i in range(n):
        idx = i + n * np.arange(p)
        combined[:, i] = samples[:, idx] @ weights[i]
    if mode == "var":
        s = sample_cov(combined, center=center)
        w_r = np.diag(np.diag(s))
    else:
        est = estimate_covariance(combined, n=n, p=1, shrinkage="auto",
                                  pattern=ZeroPattern.NONE, center=center,
                                  floor_ratio=floor_ratio)
        w_r = est.matrix
    return ensure_pd(w_r, floor_ratio)


@dataclass(frozen=True)
class CombinerConfig:
    """Knobs shared by every per-origin combination run."""

    window_days: int = 28
    shrinkage: float | str = "auto"
    zero_pattern: ZeroPattern = ZeroPattern.CROSS_BOTH
    center: bool = False
    floor_ratio: float = 1e-8
    drw_expert: str = DRW_EXPERT_ID


def run_all_methods(origin_day: dt.date, panel: Panel, forecasts: ForecastSet,
                    hierarchy: Hierarchy,
                    config: CombinerConfig = CombinerConfig(),
                    window_days: int | None = None,
                    weights_out: dict | None = None,
                    ) -> dict[str, CombinedForecast]:
    """Produce all seven methods' 96-slot forecasts for origin_day.

    One weight set per origin, estimated from the pooled validation window
    ending the day before origin_day and applied to all 96 slots.  Returns
    a dict keyed by method tag.  When ``weights_out`` is a dict it is filled
    with the fitted weights (per-variable arrays for the local methods, a
    CombinationWeights for gw) and the shrinkage intensity actually used.
    """
    wdays = config.window_days if window_days is None else window_days
    errors = validation_window(panel, forecasts, origin_day, wdays)
    samples = flatten_errors(errors)
    n = len(forecasts.series_ids)
    p = forecasts.n_experts
    ids = forecasts.series_ids

    day_fc = forecasts.day_values(origin_day)  # (series, expert, 96)
    out: dict[str, CombinedForecast] = {}

    if config.drw_expert in forecasts.expert_ids:
        j = forecasts.expert_ids.index(config.drw_expert)
        drw_vals = day_fc[:, j, :].copy()
    else:
        # naive expert not in the set: recompute the one-day copy directly
        from .naive import drw_forecast

        drw_vals = drw_forecast(panel, origin_day).values
    out["drw"] = CombinedForecast("drw", origin_day, ids, drw_vals,
                                  coherent=_is_coherent(drw_vals, hierarchy, ids))

    ew_vals = ew_combine(day_fc)
    out["ew"] = CombinedForecast("ew", origin_day, ids, ew_vals,
                                 coherent=_is_coherent(ew_vals, hierarchy, ids))

    for mode in ("var", "cov"):
        lw = local_weights(samples, n, p, mode, center=config.center,
                           floor_ratio=config.floor_ratio)
        local_vals = local_combine(day_fc, lw)
        tag = f"lw_{mode}"
        if weights_out is not None:
            weights_out[tag] = lw
        out[tag] = CombinedForecast(tag, origin_day, ids, local_vals,
                                    coherent=_is_coherent(local_vals, hierarchy, ids))
        w_r = scr_reconciliation_cov(samples, lw, n, p, mode,
                                     center=config.center,
                                     floor_ratio=config.floor_ratio)
        scr_vals = reconcile_projection(local_vals, hierarchy, ids, w_r)
        out[f"scr_{mode}"] = CombinedForecast(f"scr_{mode}", origin_day, ids,
                                              scr_vals, coherent=True)

    est = estimate_covariance(samples, n=n, p=p, shrinkage=config.shrinkage,
                              pattern=config.zero_pattern, center=config.center,
                              floor_ratio=config.floor_ratio)
    k = build_stacking_matrix(n, p)
    weights = gw_weights(est.matrix, k, origin_day=origin_day)
    if weights_out is not None:
        weights_out["gw"] = weights
        weights_out["shrinkage_lambda"] = est.shrinkage_lambda
    gw_vals = gw_combine(weights, stack_forecasts(day_fc), hierarchy, ids)
    out["gw"] = CombinedForecast("gw", origin_day, ids, gw_vals, coherent=True)
    return out


def _is_coherent(values: np.ndarray, hierarchy: Hierarchy, ids) -> bool:
    gap = coherency_gap(values, hierarchy, ids)
    return gap <= 1e-6 * max(float(np.abs(values).max()), 1e-300)
