"""Scikit-learn flavored wrappers around the combination machinery.

All combiners share one contract: ``fit(E)`` takes a (T, m) matrix of
validation errors in expert-major order (m = n_variables * n_experts) and
``predict(Yhat)`` maps stacked base forecasts, shape (n_samples, m), to
combined forecasts, shape (n_samples, n_variables).  They compose with
sklearn pipelines and model selection via ``get_params``/``set_params``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .combine import (
    build_stacking_matrix,
    gw_weights,
    local_weights,
    reconcile_projection,
    scr_reconciliation_cov,
)
from .covariance import ZeroPattern, estimate_covariance
from .panel import Hierarchy


class _StackedCombiner(BaseEstimator):
    """Shared plumbing: dimension bookkeeping and weight application."""

    def __init__(self, n_variables, n_experts):
        self.n_variables = n_variables
        self.n_experts = n_experts

    def _validate(self, X, attr="m_"):
        X = check_array(X, ensure_2d=True, dtype=float)
        m = self.n_variables * self.n_experts
        if X.shape[1] != m:
            raise ValueError(f"expected {m} columns (expert-major), got {X.shape[1]}")
        return X

    def predict(self, X):
        """Combine stacked base forecasts row by row."""
        check_is_fitted(self, "weights_")
        X = self._validate(X)
        return X @ self.weights_

    def fit_predict(self, E, X):
        return self.fit(E).predict(X)


class EqualWeightsCombiner(_StackedCombiner):
    """Per-variable arithmetic mean across experts; fit is a no-op."""

    def fit(self, E=None, y=None):
        n, p = self.n_variables, self.n_experts
        self.weights_ = build_stacking_matrix(n, p) / p
        return self


class LocalCombiner(_StackedCombiner):
    """Per-variable single-task weights: inverse-variance or minimum-variance.

    ``mode='var'`` ignores cross-expert error covariances (Bates-Granger),
    ``mode='cov'`` uses the full per-variable expert covariance
    (Newbold-Granger; weights may be negative).
    """

    def __init__(self, n_variables, n_experts, mode="var", center=False):
        super().__init__(n_variables, n_experts)
        self.mode = mode
        self.center = center

    def fit(self, E, y=None):
        E = self._validate(E)
        n, p = self.n_variables, self.n_experts
        self.per_variable_weights_ = local_weights(E, n, p, self.mode,
                                                   center=self.center)
        weights = np.zeros((n * p, n))
        for i in range(n):
            weights[i + n * np.arange(p), i] = self.per_variable_weights_[i]
        self.weights_ = weights
        return self


class GlobalCombiner(_StackedCombiner):
    """Multi-task GLS combiner with shrunk, structurally-zeroed covariance.

    Fitting estimates the m x m error covariance from the validation errors
    (shrinkage toward its diagonal, selected entries zeroed, repaired to
    p.d.) and solves the stacked regression for the weight matrix.
    """

    def __init__(self, n_variables, n_experts, shrinkage="auto",
                 zero_pattern=ZeroPattern.CROSS_BOTH.value, center=False,
                 floor_ratio=1e-8):
        super().__init__(n_variables, n_experts)
        self.shrinkage = shrinkage
        self.zero_pattern = zero_pattern
        self.center = center
        self.floor_ratio = floor_ratio

    def fit(self, E, y=None):
        E = self._validate(E)
        n, p = self.n_variables, self.n_experts
        est = estimate_covariance(E, n=n, p=p, shrinkage=self.shrinkage,
                                  pattern=ZeroPattern(self.zero_pattern),
                                  center=self.center,
                                  floor_ratio=self.floor_ratio)
        self.covariance_ = est.matrix
        self.shrinkage_lambda_ = est.shrinkage_lambda
        cw = gw_weights(est.matrix, build_stacking_matrix(n, p))
        self.weights_ = np.asarray(cw.omega)
        return self


class ProjectionReconciler(BaseEstimator):
    """Make per-variable forecasts coherent with total = sum(bottoms).

    ``fit(E_c)`` takes locally-combined validation errors, shape (T, n) in
    the order of ``series_ids``, and estimates the reconciliation covariance
    (``mode='var'``: variances only; ``mode='cov'``: shrunk full matrix);
    ``transform(X)`` projects each row onto the coherent subspace.
    """

    def __init__(self, hierarchy: Hierarchy, series_ids=None, mode="var",
                 center=False):
        self.hierarchy = hierarchy
        self.series_ids = series_ids
        self.mode = mode
        self.center = center

    def _ids(self):
        return tuple(self.series_ids) if self.series_ids is not None \
            else self.hierarchy.series_ids

    def fit(self, E_c, y=None):
        E_c = check_array(E_c, ensure_2d=True, dtype=float)
        n = len(self._ids())
        if E_c.shape[1] != n:
            raise ValueError(f"expected {n} columns, got {E_c.shape[1]}")
        weights = np.ones((n, 1))  # already-combined single column per variable
        self.reconciliation_cov_ = scr_reconciliation_cov(
            E_c, weights, n, 1, self.mode, center=self.center)
        return self

    def transform(self, X):
        check_is_fitted(self, "reconciliation_cov_")
        X = check_array(X, ensure_2d=True, dtype=float)
        out = reconcile_projection(X.T, self.hierarchy, self._ids(),
                                   self.reconciliation_cov_)
        return out.T
