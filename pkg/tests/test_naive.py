import datetime as dt

import numpy as np
import pytest

from loadblend.errors import InsufficientHistoryError
from loadblend.naive import add_drw_expert, drw_forecast
from loadblend.panel import SLOTS_PER_DAY, ForecastSet, Panel

DAY0 = dt.date(2024, 3, 1)


def test_constant_panel():
    panel = Panel(("a", "b"), DAY0, np.full((2, 5, 96), 100.0))
    fc = drw_forecast(panel, DAY0 + dt.timedelta(days=3))
    assert np.all(fc.values == 100.0)


def test_copy_semantics():
    values = np.zeros((1, 3, 96))
    values[0, 1, :] = np.arange(1, 97)  # day d-1 has v(h) = h
    panel = Panel(("a",), DAY0, values)
    fc = drw_forecast(panel, DAY0 + dt.timedelta(days=2))
    np.testing.assert_array_equal(fc.values[0], np.arange(1, 97))


def test_periodic_panel_gives_zero_errors():
    profile = np.sin(np.arange(96) / 7.0) + 2.0
    values = np.tile(profile, (1, 6, 1))
    panel = Panel(("a",), DAY0, values)
    for d in range(1, 6):
        day = DAY0 + dt.timedelta(days=d)
        err = drw_forecast(panel, day).values - panel.day_values(day)
        assert np.all(err == 0.0)


def test_missing_source_day():
    panel = Panel(("a",), DAY0, np.ones((1, 2, 96)))
    with pytest.raises(InsufficientHistoryError) as exc:
        drw_forecast(panel, DAY0)
    assert exc.value.first_missing_day == DAY0 - dt.timedelta(days=1)


def test_depends_only_on_previous_day():
    rng = np.random.default_rng(0)
    values = rng.uniform(10, 20, size=(2, 6, 96))
    target = DAY0 + dt.timedelta(days=3)
    base = drw_forecast(Panel(("a", "b"), DAY0, values), target)
    perturbed = values.copy()
    perturbed[:, [0, 1, 3, 4, 5], :] += rng.normal(size=(2, 5, 96))
    after = drw_forecast(Panel(("a", "b"), DAY0, perturbed), target)
    np.testing.assert_array_equal(base.values, after.values)


def test_error_is_one_day_difference():
    rng = np.random.default_rng(1)
    values = rng.uniform(10, 20, size=(1, 4, 96))
    panel = Panel(("a",), DAY0, values)
    day = DAY0 + dt.timedelta(days=2)
    err = panel.day_values(day) - drw_forecast(panel, day).values
    np.testing.assert_allclose(err, values[:, 2] - values[:, 1])


def test_add_drw_expert_aligns_days():
    rng = np.random.default_rng(2)
    values = rng.uniform(10, 20, size=(1, 5, 96))
    panel = Panel(("a",), DAY0, values)
    fc = ForecastSet(("a",), ("provider",), DAY0 + dt.timedelta(days=1),
                     rng.uniform(10, 20, size=(1, 1, 4, SLOTS_PER_DAY)))
    out = add_drw_expert(panel, fc)
    assert out.expert_ids == ("provider", "drw")
    j = out.expert_ids.index("drw")
    for d in range(4):
        np.testing.assert_array_equal(out.values[0, j, d], values[0, d])


def test_add_drw_expert_requires_history():
    panel = Panel(("a",), DAY0, np.ones((1, 3, 96)))
    fc = ForecastSet(("a",), ("provider",), DAY0, np.ones((1, 1, 3, 96)))
    with pytest.raises(InsufficientHistoryError):
        add_drw_expert(panel, fc)
