import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import millsense as ms
from millsense.errors import (
    EmptySeries,
    NonFiniteSample,
    SeriesTooShort,
    TooFewRecords,
    UnknownGroupPrefix,
)
from millsense.features import FEATURE_NAMES, box_stats, magnitude_spectrum

finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
series_strategy = st.lists(finite_floats, min_size=1, max_size=60).map(np.array)


def full_dft_energy(x: np.ndarray) -> float:
    """Independent oracle: sum of |X_k|^2 over the full two-sided spectrum by
    direct summation."""
    n = x.size
    total = 0.0
    for k in range(n):
        re = sum(x[j] * math.cos(2 * math.pi * k * j / n) for j in range(n))
        im = sum(x[j] * math.sin(2 * math.pi * k * j / n) for j in range(n))
        total += re * re + im * im
    return total


def one_sided_energy(mags: np.ndarray, n: int) -> float:
    """Full-spectrum energy reconstructed from the one-sided magnitudes of a
    centered real series (DC is zero; the Nyquist bin appears once when n is
    even)."""
    sq = mags * mags
    if n % 2 == 0:
        return 2.0 * float(sq[:-1].sum()) + float(sq[-1])
    return 2.0 * float(sq.sum())


class TestBoxStats:
    def test_exact_order_statistics(self):
        assert box_stats([1, 2, 3, 4, 5]).as_tuple() == (1, 2, 3, 4, 5)

    def test_single_sample(self):
        assert box_stats([7]).as_tuple() == (7, 7, 7, 7, 7)

    def test_interpolated_quartiles(self):
        # positions (n-1)*p for n=4: q1 at 0.75, median at 1.5, q3 at 2.25
        assert box_stats([1, 2, 3, 4]).as_tuple() == (1.0, 1.75, 2.5, 3.25, 4.0)

    def test_empty_series(self):
        with pytest.raises(EmptySeries):
            box_stats([])

    def test_non_finite_sample(self):
        with pytest.raises(NonFiniteSample, match="sample 2"):
            box_stats([1.0, 2.0, float("nan")])

    @given(series_strategy)
    def test_permutation_invariant(self, series):
        shuffled = series[np.random.default_rng(0).permutation(series.size)]
        assert box_stats(series) == box_stats(shuffled)

    @given(
        series_strategy,
        st.floats(min_value=0.01, max_value=100.0),
        st.floats(min_value=-100.0, max_value=100.0),
    )
    def test_monotone_affine_equivariant(self, series, a, b):
        base = np.array(box_stats(series).as_tuple())
        scaled = np.array(box_stats(a * series + b).as_tuple())
        np.testing.assert_allclose(scaled, a * base + b, rtol=1e-9, atol=1e-9)


class TestMagnitudeSpectrum:
    def test_constant_series_is_zero(self):
        mags = magnitude_spectrum(np.full(16, 3.7))
        assert mags.shape == (8,)
        np.testing.assert_array_equal(mags, np.zeros(8))

    def test_bin_aligned_cosine(self):
        # closed form: a cosine exactly on bin k0 has magnitude A*n/2 there
        n, k0, amp = 32, 3, 2.5
        x = amp * np.cos(2 * np.pi * k0 * np.arange(n) / n)
        mags = magnitude_spectrum(x)
        assert mags[k0 - 1] == pytest.approx(amp * n / 2, rel=1e-9)
        others = np.delete(mags, k0 - 1)
        assert np.all(others < 1e-9 * amp * n / 2)

    def test_parseval_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(8, 64))
            x = rng.normal(size=n)
            xc = x - x.mean()
            mags = magnitude_spectrum(x)
            assert one_sided_energy(mags, n) == pytest.approx(
                n * float(xc @ xc), rel=1e-9
            )

    def test_matches_direct_summation_oracle(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=24)
        xc = x - x.mean()
        mags = magnitude_spectrum(x)
        assert one_sided_energy(mags, 24) == pytest.approx(full_dft_energy(xc), rel=1e-9)

    def test_output_length(self):
        assert magnitude_spectrum(np.arange(9.0)).shape == (4,)
        assert magnitude_spectrum(np.arange(10.0)).shape == (5,)

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            magnitude_spectrum(np.arange(7.0))

    @given(st.lists(finite_floats, min_size=8, max_size=48), st.floats(-1e3, 1e3))
    @settings(max_examples=40)
    def test_dc_shift_invariant(self, series, c):
        base = magnitude_spectrum(np.array(series))
        shifted = magnitude_spectrum(np.array(series) + c)
        np.testing.assert_allclose(shifted, base, rtol=1e-9, atol=1e-6)


def _record(fa, fz, mode=ms.CuttingMode.UP, **params):
    defaults = dict(feed_f=0.3, spindle_n=3000.0, cutting_speed_vc=180.0, depth_ap=1.0)
    defaults.update(params)
    return ms.ExperimentRecord(
        id="t0",
        params=ms.ProcessParams(mode=mode, **defaults),
        signals=ms.ForceSignals(fa=np.asarray(fa, float), fz=np.asarray(fz, float),
                                sample_rate_hz=100.0),
        targets={"Ramean": 1.0},
    )


class TestFeaturize:
    def test_constant_signals_zero_freq_stats(self):
        rec = _record(np.full(16, 5.0), np.full(12, -2.0))
        fv = ms.featurize(rec)
        by_name = dict(zip(fv.names, fv.values))
        for nm in fv.names:
            if "_freq_" in nm:
                assert by_name[nm] == 0.0

    def test_length_constant_across_signal_lengths(self):
        rng = np.random.default_rng(2)
        v1 = ms.featurize(_record(rng.normal(size=8), rng.normal(size=8)))
        v2 = ms.featurize(_record(rng.normal(size=301), rng.normal(size=77)))
        assert v1.values.size == v2.values.size == 25

    def test_time_stats_reuse_box_stats(self):
        rec = _record([1, 2, 3, 4, 5, 1, 2, 3, 4, 5], np.zeros(8) + 1.0)
        fv = ms.featurize(rec)
        by_name = dict(zip(fv.names, fv.values))
        assert by_name["Fa_time_min"] == 1.0
        assert by_name["Fa_time_median"] == 3.0
        assert by_name["Fa_time_max"] == 5.0

    def test_mode_flag(self):
        up = ms.featurize(_record(np.arange(8.0), np.arange(8.0)))
        down = ms.featurize(
            _record(np.arange(8.0), np.arange(8.0), mode=ms.CuttingMode.DOWN)
        )
        i = FEATURE_NAMES.index("mode_flag")
        assert up.values[i] == 0.0
        assert down.values[i] == 1.0

    def test_schema_order(self):
        assert FEATURE_NAMES[:5] == ("f", "n", "vc", "ap", "mode_flag")
        assert FEATURE_NAMES[5] == "Fa_time_min"
        assert FEATURE_NAMES[10] == "Fa_freq_min"
        assert FEATURE_NAMES[15] == "Fz_time_min"
        assert FEATURE_NAMES[24] == "Fz_freq_max"


class TestFeaturizeDataset:
    def test_no_drop_gives_25_columns(self, synth_small):
        X, names = ms.featurize_dataset(synth_small)
        assert X.shape == (60, 25)
        assert names == list(FEATURE_NAMES)

    def test_drop_both_sensor_groups(self, synth_small):
        X, names = ms.featurize_dataset(synth_small, {"Fa_", "Fz_"})
        assert X.shape[1] == 5
        assert names == ["f", "n", "vc", "ap", "mode_flag"]

    def test_drop_fz_gives_15_columns(self, synth_small):
        X, names = ms.featurize_dataset(synth_small, {"Fz_"})
        assert X.shape[1] == 15
        assert not any(nm.startswith("Fz_") for nm in names)

    def test_unknown_prefix(self, synth_small):
        with pytest.raises(UnknownGroupPrefix):
            ms.featurize_dataset(synth_small, {"Fx_"})

    def test_empty_dataset_rejected(self):
        with pytest.raises(TooFewRecords):
            ms.featurize_dataset(ms.Dataset(records=()))

    def test_rows_follow_record_order(self, synth_small):
        X, _ = ms.featurize_dataset(synth_small)
        third = ms.featurize(synth_small.records[2]).values
        np.testing.assert_array_equal(X[2], third)
