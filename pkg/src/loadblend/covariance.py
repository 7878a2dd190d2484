"""Error-covariance estimation: sampling, shrinkage, structural zeroing, repair.

The full pipeline used by the global combiner is

    sample_cov -> shrink_to_diagonal -> apply_zero_pattern -> ensure_pd

in that order, so the requested sparsity survives shrinkage and any
indefiniteness introduced by zeroing is repaired last.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InsufficientSamplesError

SYMMETRY_RTOL = 1e-12


class ZeroPattern(str, Enum):
    """Which off-diagonal covariance entries are forced to zero.

    Entries are indexed by (variable, expert) pairs in expert-major order.
    ``CROSS_BOTH`` zeroes an entry only when both the variables and the
    experts differ; ``CROSS_VARIABLE`` zeroes every cross-variable entry.
    """

    NONE = "none"
    CROSS_BOTH = "cross_both"
    CROSS_VARIABLE = "cross_variable"


@dataclass(frozen=True)
class CovEstimate:
    """An m x m error covariance with its estimation metadata."""

    matrix: np.ndarray = field(repr=False)
    n: int
    p: int
    method: str = "sample"
    shrinkage_lambda: float = 0.0
    zero_pattern: ZeroPattern = ZeroPattern.NONE

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        m = self.n * self.p
        if mat.shape != (m, m):
            raise ValueError(f"expected {m}x{m} matrix, got {mat.shape}")
        _check_symmetric(mat)
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def m(self) -> int:
        return self.n * self.p


def _check_symmetric(mat: np.ndarray) -> None:
    scale = max(np.abs(mat).max(), 1.0)
    if np.abs(mat - mat.T).max() > SYMMETRY_RTOL * scale * 10:
        raise ValueError("matrix is not symmetric")


def sample_cov(samples: np.ndarray, center: bool = False) -> np.ndarray:
    """Second-moment matrix (1/T) X'X of the (optionally demeaned) samples.

    ``center=False`` treats the rows as zero-mean, matching the unbiased
    base-forecast assumption.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2:
        raise ValueError("samples must be a T x m matrix")
    t = x.shape[0]
    if t < 2:
        raise InsufficientSamplesError(f"need at least 2 samples, got {t}")
    if center:
        x = x - x.mean(axis=0)
    s = x.T @ x / t
    return (s + s.T) / 2.0


def shrink_to_diagonal(s: np.ndarray, lam: float) -> np.ndarray:
    """Convex blend (1-lam)*S + lam*diag(S); the diagonal never moves."""
    s = np.asarray(s, dtype=float)
    _check_symmetric(s)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"shrinkage intensity must be in [0, 1], got {lam}")
    return (1.0 - lam) * s + lam * np.diag(np.diag(s))


def estimate_lambda(samples: np.ndarray, center: bool = False) -> float:
    """Optimal diagonal-target shrinkage intensity (Schaefer-Strimmer).

    lambda* = sum_{i!=j} Var(s_ij) / sum_{i!=j} s_ij^2, clipped to [0, 1];
    returns 1 when the off-diagonal of S is already identically zero.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2:
        raise ValueError("samples must be a T x m matrix")
    t = x.shape[0]
    if t < 3:
        raise InsufficientSamplesError(f"need at least 3 samples, got {t}")
    if center:
        x = x - x.mean(axis=0)
    s = x.T @ x / t
    off = ~np.eye(s.shape[0], dtype=bool)
    denom = float((s[off] ** 2).sum())
    if denom == 0.0:
        return 1.0
    # Var of each entry of the mean of the per-sample outer products.
    w_mean = s
    sq_mean = (x ** 2).T @ (x ** 2) / t
    var_w = sq_mean - w_mean ** 2  # per-sample variance of w_t = x_i x_j
    var_s = var_w * t / ((t - 1) ** 2)  # variance of the mean, small-sample scaled
    num = float(var_s[off].sum())
    return float(np.clip(num / denom, 0.0, 1.0))


def zero_mask(pattern: ZeroPattern, n: int, p: int) -> np.ndarray:
    """Boolean m x m mask of entries the pattern forces to zero."""
    m = n * p
    variable = np.tile(np.arange(n), p)
    expert = np.repeat(np.arange(p), n)
    var_diff = variable[:, None] != variable[None, :]
    exp_diff = expert[:, None] != expert[None, :]
    if pattern is ZeroPattern.NONE:
        return np.zeros((m, m), dtype=bool)
    if pattern is ZeroPattern.CROSS_BOTH:
        return var_diff & exp_diff
    if pattern is ZeroPattern.CROSS_VARIABLE:
        return var_diff
    raise ValueError(f"unknown zero pattern {pattern!r}")


def apply_zero_pattern(w: np.ndarray, pattern: ZeroPattern, n: int, p: int) -> np.ndarray:
    """Force the pattern's entries to exactly zero, leaving the rest untouched."""
    w = np.asarray(w, dtype=float)
    m = n * p
    if w.shape != (m, m):
        raise ValueError(f"expected {m}x{m} matrix for n={n}, p={p}, got {w.shape}")
    out = w.copy()
    out[zero_mask(ZeroPattern(pattern), n, p)] = 0.0
    return out


def ensure_pd(w: np.ndarray, floor_ratio: float = 1e-8) -> np.ndarray:
    """Raise eigenvalues below floor_ratio * lambda_max to that floor.

    Leaves matrices already satisfying the floor bit-identical.
    """
    if floor_ratio <= 0:
        raise ValueError("floor_ratio must be positive")
    w = np.asarray(w, dtype=float)
    _check_symmetric(w)
    eigval, eigvec = np.linalg.eigh(w)
    floor = floor_ratio * max(eigval.max(), 0.0)
    if floor <= 0.0:
        # all-zero (or negative-definite) input: fall back to an absolute floor
        floor = floor_ratio
    if eigval.min() >= floor:
        return w
    fixed = np.maximum(eigval, floor)
    out = (eigvec * fixed) @ eigvec.T
    return (out + out.T) / 2.0


def estimate_covariance(samples: np.ndarray, n: int, p: int, *,
                        shrinkage: float | str = "auto",
                        pattern: ZeroPattern = ZeroPattern.CROSS_BOTH,
                        center: bool = False,
                        floor_ratio: float = 1e-8) -> CovEstimate:
    """Full pipeline from a T x m error sample matrix to a usable CovEstimate."""
    if shrinkage == "auto":
        lam = estimate_lambda(samples, center=center)
    else:
        lam = float(shrinkage)
    pattern = ZeroPattern(pattern)
    s = sample_cov(samples, center=center)
    w = shrink_to_diagonal(s, lam)
    w = apply_zero_pattern(w, pattern, n, p)
    w = ensure_pd(w, floor_ratio)
    return CovEstimate(w, n, p, method="shrunk-zeroed",
                       shrinkage_lambda=lam, zero_pattern=pattern)
