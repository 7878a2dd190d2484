import datetime as dt

import numpy as np
import pytest

from loadblend.panel import coherency_gap
from loadblend.synth import ExpertSpec, SynthSpec, synth_generate


def test_deterministic_under_seed():
    spec = SynthSpec(n_zones=3, days=10, seed=42)
    p1, f1, _ = synth_generate(spec)
    p2, f2, _ = synth_generate(spec)
    np.testing.assert_array_equal(p1.values, p2.values)
    np.testing.assert_array_equal(f1.values, f2.values)


def test_different_seed_differs():
    p1, _, _ = synth_generate(SynthSpec(n_zones=2, days=5, seed=1))
    p2, _, _ = synth_generate(SynthSpec(n_zones=2, days=5, seed=2))
    assert not np.array_equal(p1.values, p2.values)


def test_truth_is_coherent():
    panel, _, hierarchy = synth_generate(SynthSpec(n_zones=4, days=8, seed=0))
    for d in range(panel.n_days):
        gap = coherency_gap(panel.values[:, d, :], hierarchy,
                            panel.series_ids)
        assert gap <= 1e-9 * np.abs(panel.values[:, d, :]).max()


def test_zero_noise_experts_equal_truth():
    spec = SynthSpec(n_zones=2, days=6, seed=0, truth_noise_sd=0.02,
                     experts=(ExpertSpec("perfect", bias=0.0, noise_sd=0.0),))
    panel, forecasts, _ = synth_generate(spec)
    np.testing.assert_array_equal(forecasts.values[:, 0], panel.values)


def test_negative_noise_rejected():
    with pytest.raises(ValueError):
        ExpertSpec("bad", noise_sd=-0.1)


def test_bias_shifts_forecasts():
    spec = SynthSpec(n_zones=1, days=6, seed=0,
                     experts=(ExpertSpec("biased", bias=0.1, noise_sd=0.0),))
    panel, forecasts, _ = synth_generate(spec)
    levels = np.concatenate([spec.levels(), [spec.levels().sum()]])
    shift = forecasts.values[:, 0] - panel.values
    expected = np.broadcast_to(0.1 * levels[:, None, None], shift.shape)
    np.testing.assert_allclose(shift, expected)


def test_weekly_modulation_applied():
    spec = SynthSpec(n_zones=1, days=14, seed=0, truth_noise_sd=1e-9,
                     weekly_modulation=(1, 1, 1, 1, 1, 0.5, 0.5),
                     first_day=dt.date(2024, 1, 1))  # a Monday
    panel, _, _ = synth_generate(spec)
    monday, saturday = panel.values[0, 0], panel.values[0, 5]
    np.testing.assert_allclose(saturday, 0.5 * monday, rtol=1e-5)


def test_expert_correlation():
    spec = SynthSpec(n_zones=7, days=100, seed=3, truth_noise_sd=1e-9,
                     experts=(ExpertSpec("corr", noise_sd=0.05, rho=0.8),))
    panel, forecasts, _ = synth_generate(spec)
    err = (forecasts.values[:, 0] - panel.values).reshape(8, -1)
    err = err / err.std(axis=1, keepdims=True)
    corr = np.corrcoef(err)
    off = corr[~np.eye(8, dtype=bool)]
    assert abs(off.mean() - 0.8) < 0.05


def test_invalid_specs():
    with pytest.raises(ValueError):
        SynthSpec(n_zones=0)
    with pytest.raises(ValueError):
        SynthSpec(days=1)
    with pytest.raises(ValueError):
        SynthSpec(weekly_modulation=(1.0, 1.0))
    with pytest.raises(ValueError):
        synth_generate(SynthSpec(n_zones=2, zone_levels=(1.0,)))
