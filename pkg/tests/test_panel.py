import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loadblend.errors import InsufficientHistoryError
from loadblend.panel import (
    SLOTS_PER_DAY,
    ErrorPanel,
    ForecastSet,
    Hierarchy,
    Panel,
    TimeIndex,
    build_stacking_matrix,
    coherency_gap,
    flatten_errors,
    validation_window,
)

DAY0 = dt.date(2024, 1, 1)


def make_panel(n_series=2, n_days=30, rng=None, ids=None):
    rng = rng or np.random.default_rng(0)
    ids = ids or tuple(f"s{i}" for i in range(n_series))
    values = rng.uniform(50, 150, size=(len(ids), n_days, SLOTS_PER_DAY))
    return Panel(ids, DAY0, values)


def make_forecasts(panel, n_experts=2, rng=None):
    rng = rng or np.random.default_rng(1)
    noise = rng.normal(0, 1, size=(panel.n_series, n_experts,
                                   panel.n_days, SLOTS_PER_DAY))
    return ForecastSet(panel.series_ids,
                       tuple(f"e{j}" for j in range(n_experts)),
                       panel.first_day, panel.values[:, None] + noise)


class TestTimeIndex:
    def test_valid_slots(self):
        assert TimeIndex(DAY0, 1).slot == 1
        assert TimeIndex(DAY0, 96).slot == 96

    @pytest.mark.parametrize("slot", [0, 97, -1])
    def test_invalid_slot(self, slot):
        with pytest.raises(ValueError):
            TimeIndex(DAY0, slot)


class TestHierarchy:
    def test_basic(self):
        h = Hierarchy("tot", ("a", "b"))
        assert h.n == 3
        assert h.series_ids == ("a", "b", "tot")

    def test_empty_bottoms_rejected(self):
        with pytest.raises(ValueError):
            Hierarchy("tot", ())

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            Hierarchy("tot", ("a", "a"))

    def test_total_among_bottoms_rejected(self):
        with pytest.raises(ValueError):
            Hierarchy("a", ("a", "b"))


class TestStackingMatrix:
    def test_identity_case(self):
        assert build_stacking_matrix(1, 1).tolist() == [[1.0]]

    def test_n2_p2(self):
        expected = [[1, 0], [0, 1], [1, 0], [0, 1]]
        assert build_stacking_matrix(2, 2).tolist() == expected

    def test_n3_p2_is_two_stacked_identities(self):
        k = build_stacking_matrix(3, 2)
        assert k.shape == (6, 3)
        np.testing.assert_array_equal(k[:3], np.eye(3))
        np.testing.assert_array_equal(k[3:], np.eye(3))

    @pytest.mark.parametrize("n,p", [(0, 1), (1, 0), (-2, 3)])
    def test_invalid_args(self, n, p):
        with pytest.raises(ValueError):
            build_stacking_matrix(n, p)

    @given(n=st.integers(1, 8), p=st.integers(1, 5))
    def test_row_and_column_sums(self, n, p):
        k = build_stacking_matrix(n, p)
        assert (k.sum(axis=0) == p).all()
        assert (k.sum(axis=1) == 1).all()

    @given(n=st.integers(1, 6), p=st.integers(1, 4), seed=st.integers(0, 1000))
    @settings(max_examples=30)
    def test_kx_stacks_x(self, n, p, seed):
        # K x must equal x repeated p times, exactly
        x = np.random.default_rng(seed).integers(-5, 5, size=n).astype(float)
        kx = build_stacking_matrix(n, p) @ x
        np.testing.assert_array_equal(kx, np.tile(x, p))


class TestCoherencyGap:
    def test_coherent(self):
        h = Hierarchy("tot", ("a", "b"))
        assert coherency_gap(np.array([4.0, 6.0, 10.0]), h) == 0.0

    def test_incoherent(self):
        h = Hierarchy("tot", ("a", "b"))
        assert coherency_gap(np.array([4.0, 5.0, 10.0]), h) == pytest.approx(1.0)

    def test_empty_hierarchy_rejected(self):
        with pytest.raises(ValueError):
            Hierarchy("tot", ())

    def test_mismatched_length(self):
        h = Hierarchy("tot", ("a", "b"))
        with pytest.raises(ValueError):
            coherency_gap(np.array([1.0, 2.0]), h)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(7)
        bottoms = tuple("abcde")
        vals = rng.normal(size=6)
        h1 = Hierarchy("tot", bottoms)
        gap1 = coherency_gap(vals, h1)
        perm = rng.permutation(5)
        h2 = Hierarchy("tot", tuple(bottoms[i] for i in perm))
        vals2 = np.concatenate([vals[perm], vals[-1:]])
        gap2 = coherency_gap(vals2, h2)
        assert gap1 == pytest.approx(gap2)


class TestValidationWindow:
    def test_four_week_window_sample_count(self):
        panel = make_panel(n_days=40)
        fc = make_forecasts(panel)
        errors = validation_window(panel, fc, DAY0 + dt.timedelta(days=30), 28)
        assert errors.n_days == 28
        assert errors.values.shape == (2, 2, 28, 96)
        assert flatten_errors(errors).shape[0] == 28 * 96 == 2688

    def test_perfect_forecast_zero_errors(self):
        panel = make_panel(n_days=5)
        fc = ForecastSet(panel.series_ids, ("e0",), panel.first_day,
                         panel.values[:, None])
        errors = validation_window(panel, fc, DAY0 + dt.timedelta(days=2), 1)
        assert np.all(errors.values == 0.0)

    def test_origin_at_first_day_fails(self):
        panel = make_panel(n_days=5)
        fc = make_forecasts(panel)
        with pytest.raises(InsufficientHistoryError) as exc:
            validation_window(panel, fc, DAY0, 1)
        assert exc.value.first_missing_day == DAY0 - dt.timedelta(days=1)

    def test_errors_are_forecast_minus_actual(self):
        panel = make_panel(n_days=10)
        fc = make_forecasts(panel)
        origin = DAY0 + dt.timedelta(days=8)
        errors = validation_window(panel, fc, origin, 5)
        rng = np.random.default_rng(3)
        for _ in range(20):
            i = rng.integers(0, 2)
            j = rng.integers(0, 2)
            d = rng.integers(0, 5)
            s = rng.integers(0, 96)
            day = origin - dt.timedelta(days=5) + dt.timedelta(days=int(d))
            expected = (fc.values[i, j, fc.day_index(day), s]
                        - panel.values[i, panel.day_index(day), s])
            assert errors.values[i, j, d, s] == expected


class TestFlattenErrors:
    def test_expert_major_ordering(self):
        # one series axis n=2, experts p=2, one day; plant distinct values
        vals = np.zeros((2, 2, 1, 96))
        a, b, c, d = 1.0, 2.0, 3.0, 4.0
        vals[0, 0, 0, 0] = a  # var1, exp1
        vals[1, 0, 0, 0] = b  # var2, exp1
        vals[0, 1, 0, 0] = c  # var1, exp2
        vals[1, 1, 0, 0] = d  # var2, exp2
        ep = ErrorPanel(("v1", "v2"), ("e1", "e2"), DAY0, vals)
        row0 = flatten_errors(ep)[0]
        assert row0.tolist() == [a, b, c, d]

    def test_zero_panel(self):
        ep = ErrorPanel(("v1",), ("e1",), DAY0, np.zeros((1, 1, 3, 96)))
        assert np.all(flatten_errors(ep) == 0)
        assert flatten_errors(ep).shape == (3 * 96, 1)

    @pytest.mark.parametrize("window", [1, 7, 28])
    def test_row_count_property(self, window):
        panel = make_panel(n_series=3, n_days=31)
        fc = make_forecasts(panel, n_experts=2)
        errors = validation_window(panel, fc, panel.last_day, window)
        assert flatten_errors(errors).shape == (window * 96, 6)

    def test_chronological_rows(self):
        vals = np.zeros((1, 1, 2, 96))
        vals[0, 0, 0, :] = 1.0
        vals[0, 0, 1, :] = 2.0
        ep = ErrorPanel(("v",), ("e",), DAY0, vals)
        flat = flatten_errors(ep)
        assert np.all(flat[:96] == 1.0) and np.all(flat[96:] == 2.0)


class TestPanelInvariants:
    def test_nonfinite_rejected(self):
        values = np.ones((1, 2, 96))
        values[0, 1, 5] = np.nan
        with pytest.raises(ValueError):
            Panel(("a",), DAY0, values)

    def test_immutability(self):
        panel = make_panel()
        with pytest.raises(ValueError):
            panel.values[0, 0, 0] = 1.0

    def test_day_out_of_range(self):
        panel = make_panel(n_days=3)
        with pytest.raises(InsufficientHistoryError):
            panel.day_values(DAY0 + dt.timedelta(days=3))
