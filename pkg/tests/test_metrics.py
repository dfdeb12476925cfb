import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from millsense.errors import DimensionMismatch, EmptyInput, NearZeroActual
from millsense.metrics import mae, mape, mse

vectors = st.lists(
    st.floats(min_value=-1e4, max_value=1e4, allow_nan=False), min_size=1, max_size=40
)


class TestMse:
    def test_identical_vectors(self):
        assert mse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_unit_errors(self):
        assert mse([0.0, 0.0], [1.0, 1.0]) == 1.0

    def test_hand_sum(self):
        assert mse([1.0, 2.0, 3.0], [2.0, 2.0, 2.0]) == pytest.approx(2 / 3, rel=1e-15)

    def test_rmse_cross_check(self):
        rng = np.random.default_rng(0)
        t, p = rng.normal(size=30), rng.normal(size=30)
        rmse = float(np.sqrt(np.mean((t - p) ** 2)))
        assert mse(t, p) == pytest.approx(rmse**2, rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            mse([1.0], [1.0, 2.0])

    def test_empty(self):
        with pytest.raises(EmptyInput):
            mse([], [])


class TestMae:
    def test_identical_vectors(self):
        assert mae([4.0, 5.0], [4.0, 5.0]) == 0.0

    def test_symmetric_unit_errors(self):
        assert mae([0.0, 0.0], [1.0, -1.0]) == 1.0

    def test_hand_sum(self):
        assert mae([1.0, 2.0, 3.0], [2.0, 2.0, 2.0]) == pytest.approx(2 / 3, rel=1e-15)


class TestMape:
    def test_ten_percent(self):
        t = np.array([1.0, 2.0, 5.0])
        assert mape(t, 1.1 * t) == pytest.approx(10.0, rel=1e-12)

    def test_zero_actual_rejected(self):
        with pytest.raises(NearZeroActual, match="index 1"):
            mape([1.0, 0.0], [1.0, 1.0])

    def test_reference_anchor(self):
        # 7.1% absolute percentage deviation on a single pair
        assert mape([100.0], [92.9]) == pytest.approx(7.1, rel=1e-12)

    def test_scale_invariant(self):
        t = np.array([1.0, 2.0, 3.0])
        p = np.array([1.2, 1.9, 3.3])
        for a in (3.0, -2.5, 0.125):
            assert mape(a * t, a * p) == pytest.approx(mape(t, p), rel=1e-12)


class TestSharedProperties:
    @given(vectors)
    def test_zero_iff_equal(self, vals):
        t = np.array(vals)
        assert mse(t, t) == 0.0
        assert mae(t, t) == 0.0
        p = t + 1.0
        assert mse(t, p) > 0.0
        assert mae(t, p) > 0.0

    @given(vectors, vectors)
    def test_non_negative(self, a, b):
        n = min(len(a), len(b))
        t, p = np.array(a[:n]), np.array(b[:n])
        assert mse(t, p) >= 0.0
        assert mae(t, p) >= 0.0
