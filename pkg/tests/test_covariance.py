import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loadblend.covariance import (
    CovEstimate,
    ZeroPattern,
    apply_zero_pattern,
    ensure_pd,
    estimate_covariance,
    estimate_lambda,
    sample_cov,
    shrink_to_diagonal,
    zero_mask,
)
from loadblend.errors import InsufficientSamplesError


def brute_force_cov(samples, center=False):
    """O(m^2 T) double-loop oracle for the second-moment matrix."""
    x = np.asarray(samples, dtype=float)
    if center:
        x = x - x.mean(axis=0)
    t, m = x.shape
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            for k in range(t):
                out[i, j] += x[k, i] * x[k, j]
    return out / t


class TestSampleCov:
    def test_antipodal_points(self):
        samples = np.array([[1.0, -1.0], [-1.0, 1.0]])
        np.testing.assert_allclose(sample_cov(samples),
                                   [[1.0, -1.0], [-1.0, 1.0]])

    def test_constant_samples_centered(self):
        samples = np.full((5, 3), 7.0)
        assert np.all(sample_cov(samples, center=True) == 0.0)

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(0)
        samples = rng.normal(size=(200, 4))
        np.testing.assert_allclose(sample_cov(samples),
                                   brute_force_cov(samples), atol=1e-12)
        np.testing.assert_allclose(sample_cov(samples, center=True),
                                   brute_force_cov(samples, center=True),
                                   atol=1e-12)

    def test_large_window_shape(self):
        rng = np.random.default_rng(1)
        samples = rng.normal(size=(2688, 16))
        s = sample_cov(samples)
        assert s.shape == (16, 16)
        np.testing.assert_allclose(s, brute_force_cov(samples), atol=1e-10)

    def test_too_few_samples(self):
        with pytest.raises(InsufficientSamplesError):
            sample_cov(np.ones((1, 3)))


class TestShrinkToDiagonal:
    S = np.array([[2.0, 1.0], [1.0, 2.0]])

    def test_lambda_zero_identity_map(self):
        np.testing.assert_array_equal(shrink_to_diagonal(self.S, 0.0), self.S)

    def test_lambda_one_gives_diagonal(self):
        np.testing.assert_array_equal(shrink_to_diagonal(self.S, 1.0),
                                      np.diag([2.0, 2.0]))

    def test_half_blend(self):
        np.testing.assert_allclose(shrink_to_diagonal(self.S, 0.5),
                                   [[2.0, 0.5], [0.5, 2.0]])

    @pytest.mark.parametrize("lam", [-0.1, 1.1])
    def test_lambda_out_of_range(self, lam):
        with pytest.raises(ValueError):
            shrink_to_diagonal(self.S, lam)

    @given(lam=st.floats(0, 1), seed=st.integers(0, 100))
    @settings(max_examples=40)
    def test_diagonal_preserved(self, lam, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(4, 4))
        s = a @ a.T
        np.testing.assert_allclose(np.diag(shrink_to_diagonal(s, lam)),
                                   np.diag(s), rtol=1e-12)


class TestEstimateLambda:
    def test_zero_offdiagonal_returns_one(self):
        # two orthogonal columns: sample covariance exactly diagonal
        samples = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        assert estimate_lambda(samples) == 1.0

    def test_strong_correlation_large_t(self):
        rng = np.random.default_rng(42)
        z = rng.normal(size=10000)
        samples = np.column_stack([z + 0.1 * rng.normal(size=10000),
                                   z + 0.1 * rng.normal(size=10000)])
        assert estimate_lambda(samples) < 0.1

    def test_duplicated_columns(self):
        rng = np.random.default_rng(7)
        z = rng.normal(size=5000)
        samples = np.column_stack([z, z])
        assert estimate_lambda(samples) < 0.05

    def test_clipped_to_unit_interval(self):
        rng = np.random.default_rng(3)
        samples = rng.normal(size=(5, 6))  # tiny T: noisy, must still clip
        lam = estimate_lambda(samples)
        assert 0.0 <= lam <= 1.0

    def test_too_few_samples(self):
        with pytest.raises(InsufficientSamplesError):
            estimate_lambda(np.ones((2, 3)))


class TestZeroPattern:
    def test_none_unchanged(self):
        w = np.arange(16.0).reshape(4, 4)
        w = (w + w.T) / 2
        np.testing.assert_array_equal(
            apply_zero_pattern(w, ZeroPattern.NONE, 2, 2), w)

    def test_cross_both_positions(self):
        w = np.ones((4, 4))
        out = apply_zero_pattern(w, ZeroPattern.CROSS_BOTH, 2, 2)
        # 1-based zero positions (1,4),(4,1),(2,3),(3,2)
        expected = np.ones((4, 4))
        for i, j in [(0, 3), (3, 0), (1, 2), (2, 1)]:
            expected[i, j] = 0.0
        np.testing.assert_array_equal(out, expected)

    def test_cross_variable_positions(self):
        w = np.ones((4, 4))
        out = apply_zero_pattern(w, ZeroPattern.CROSS_VARIABLE, 2, 2)
        expected = np.ones((4, 4))
        for i, j in [(0, 1), (1, 0), (0, 3), (3, 0), (1, 2), (2, 1), (2, 3), (3, 2)]:
            expected[i, j] = 0.0
        np.testing.assert_array_equal(out, expected)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            apply_zero_pattern(np.ones((4, 4)), ZeroPattern.CROSS_BOTH, 3, 2)

    @given(seed=st.integers(0, 50),
           pattern=st.sampled_from(list(ZeroPattern)))
    @settings(max_examples=30)
    def test_idempotent(self, seed, pattern):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(6, 6))
        w = a @ a.T
        once = apply_zero_pattern(w, pattern, 3, 2)
        np.testing.assert_array_equal(
            apply_zero_pattern(once, pattern, 3, 2), once)

    def test_cross_variable_block_structure(self):
        # permuting to variable-major order must give n blocks of size p x p
        n, p = 3, 2
        rng = np.random.default_rng(0)
        a = rng.normal(size=(n * p, n * p))
        w = apply_zero_pattern(a @ a.T, ZeroPattern.CROSS_VARIABLE, n, p)
        perm = np.argsort(np.tile(np.arange(n), p), kind="stable")
        wp = w[np.ix_(perm, perm)]
        mask = np.zeros((n * p, n * p), dtype=bool)
        for i in range(n):
            mask[i * p:(i + 1) * p, i * p:(i + 1) * p] = True
        assert np.abs(wp[~mask]).sum() == 0.0


class TestEnsurePd:
    def test_identity_unchanged(self):
        eye = np.eye(3)
        out = ensure_pd(eye)
        np.testing.assert_array_equal(out, eye)

    def test_eigenvalue_floor(self):
        out = ensure_pd(np.diag([1.0, 0.0]), floor_ratio=1e-8)
        np.testing.assert_allclose(out, np.diag([1.0, 1e-8]), atol=1e-16)

    def test_rank_one_repair(self):
        w = np.ones((2, 2))
        out = ensure_pd(w)
        assert np.abs(out - w).max() < 2e-8
        assert np.linalg.eigvalsh(out).min() > 0

    def test_nonsymmetric_rejected(self):
        with pytest.raises(ValueError):
            ensure_pd(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_negative_floor_rejected(self):
        with pytest.raises(ValueError):
            ensure_pd(np.eye(2), floor_ratio=0.0)


class TestPipeline:
    @given(seed=st.integers(0, 60),
           pattern=st.sampled_from(list(ZeroPattern)),
           n=st.integers(2, 4), p=st.integers(2, 3))
    @settings(max_examples=40, deadline=None)
    def test_pipeline_always_pd(self, seed, pattern, n, p):
        rng = np.random.default_rng(seed)
        m = n * p
        t = max(2 + m // 2, 3)
        samples = rng.normal(size=(t, m))
        est = estimate_covariance(samples, n=n, p=p, shrinkage="auto",
                                  pattern=pattern)
        assert np.linalg.eigvalsh(est.matrix).min() > 0
        assert est.matrix.shape == (m, m)
        assert 0.0 <= est.shrinkage_lambda <= 1.0

    def test_zero_pattern_survives_pipeline(self):
        rng = np.random.default_rng(5)
        samples = rng.normal(size=(100, 6))
        est = estimate_covariance(samples, n=3, p=2,
                                  pattern=ZeroPattern.CROSS_BOTH)
        # repair may re-fill zeroed entries only up to the eigenvalue floor
        mask = zero_mask(ZeroPattern.CROSS_BOTH, 3, 2)
        assert np.abs(est.matrix[mask]).max() < 1e-6

    def test_cov_estimate_validates_shape(self):
        with pytest.raises(ValueError):
            CovEstimate(np.eye(4), n=3, p=2)
