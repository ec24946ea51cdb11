import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from pbwdac import _rng
from pbwdac.circuit import DacCircuit, OpticalField, transfer_curve
from pbwdac.waveform import (DetectorSpec, JitterSpec, NrzSpec, PrbsSpec, detect, eye_accumulate,
                             nrz_waveform, prbs_sequence, run_waveform, simulate_timeseries,
                             transition_times)

NO_JITTER = JitterSpec(0.0, 0.0)
UNIT = OpticalField.from_power(1.0)


def lfsr_reference(order, seed, length):
    """Bit-by-bit Fibonacci LFSR, written independently of the vectorized generator."""
    n, m = {7: (7, 6), 15: (15, 14), 23: (23, 18), 31: (31, 28)}[order]
    hist = [(seed >> j) & 1 for j in range(n)]
    while len(hist) < length:
        hist.append(hist[-n] ^ hist[-m])
    return np.array(hist[:length], dtype=np.uint8)


def crossings(x, level=0.5):
    """Sub-sample times (in samples) where ``x`` crosses ``level``, by linear interpolation."""
    d = x - level
    idx = np.nonzero(np.sign(d[:-1]) != np.sign(d[1:]))[0]
    idx = idx[d[idx] != 0]
    return idx + d[idx] / (d[idx] - d[idx + 1])


class TestPrbs:
    @pytest.mark.parametrize("order,seed", [(7, 1), (7, 0x55), (15, 1), (23, 12345), (31, 0x7FFFFFFF)])
    def test_matches_bitwise_reference(self, order, seed):
        spec = PrbsSpec(order, seed)
        np.testing.assert_array_equal(prbs_sequence(spec, 5000), lfsr_reference(order, seed, 5000))

    @pytest.mark.parametrize("seed", [1, 2, 77, 127])
    def test_prbs7_period_and_windows(self, seed):
        s = prbs_sequence(PrbsSpec(7, seed), 127 * 3)
        np.testing.assert_array_equal(s[:127], s[127:254])
        # no shorter period
        for p in range(1, 127):
            assert not np.array_equal(s[:127], s[p:p + 127])
        windows = {int(sum(int(s[k + j]) << j for j in range(7))) for k in range(127)}
        assert windows == set(range(1, 128))
        assert int(s[:127].sum()) == 64

    def test_prbs15_balance(self):
        s = prbs_sequence(PrbsSpec(15, 1), (1 << 15) - 1)
        assert int(s.sum()) == 1 << 14

    def test_seed_prefix(self):
        s = prbs_sequence(PrbsSpec(7, 0b1011001), 7)
        assert s.tolist() == [1, 0, 0, 1, 1, 0, 1]

    @pytest.mark.parametrize("kwargs", [dict(order=9), dict(seed=0), dict(order=7, seed=128)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            PrbsSpec(**kwargs)

    def test_short_length(self):
        assert prbs_sequence(PrbsSpec(7, 3), 2).tolist() == [1, 1]
        with pytest.raises(ValueError):
            prbs_sequence(PrbsSpec(), 0)


class TestRng:
    def test_jobs_invariant(self):
        n = 3 * _rng.CHUNK_SIZE + 17
        a = _rng.standard_normal(5, n, stream=2, jobs=1)
        b = _rng.standard_normal(5, n, stream=2, jobs=8)
        assert np.array_equal(a, b)

    def test_prefix_stable(self):
        a = _rng.standard_normal(5, 1000)
        b = _rng.standard_normal(5, 2 * _rng.CHUNK_SIZE)
        assert np.array_equal(a, b[:1000])

    def test_streams_differ(self):
        assert not np.array_equal(_rng.standard_normal(5, 100, 0), _rng.standard_normal(5, 100, 1))

    def test_derive_seed(self):
        assert _rng.derive_seed(0, "jitter") == _rng.derive_seed(0, "jitter")
        assert _rng.derive_seed(0, "jitter") != _rng.derive_seed(0, "detector")
        assert _rng.derive_seed(0, "jitter") != _rng.derive_seed(1, "jitter")


class TestNrz:
    def test_ideal_levels(self):
        nrz = NrzSpec(samples_per_bit=8)
        bits = [0, 1, 1, 0, 1]
        w = nrz_waveform(bits, nrz, NO_JITTER)
        np.testing.assert_array_equal(w, np.repeat(bits, 8).astype(float))

    def test_rise_time_10_90(self):
        nrz = NrzSpec(50e9, 64, 8e-12)
        w = nrz_waveform([0, 0, 1, 1], nrz, NO_JITTER)
        c10, c90 = crossings(w, 0.1)[0], crossings(w, 0.9)[0]
        assert (c90 - c10) * nrz.time_step == pytest.approx(8e-12, rel=1e-9)
        # centred on the nominal boundary
        assert crossings(w, 0.5)[0] == pytest.approx(2 * 64, abs=1e-9)

    def test_deterministic_jitter_crossings(self):
        nrz = NrzSpec(50e9, 64, 5e-12)
        jit = JitterSpec(4e-12, 0.0)
        bits = np.tile([0, 1], 50)
        w = nrz_waveform(bits, nrz, jit)
        c = crossings(w)
        nominal = np.arange(1, 100) * 64.0
        offset = (c - nominal) * nrz.time_step
        expected = np.where(np.arange(1, 100) % 2 == 0, 2e-12, -2e-12)
        np.testing.assert_allclose(offset, expected, atol=1e-18)

    def test_random_jitter_rms(self):
        nrz = NrzSpec(50e9, 32, 5e-12)
        jit = JitterSpec(0.0, 0.5e-12, seed=3)
        bits = np.tile([0, 1], 2000)
        c = crossings(nrz_waveform(bits, nrz, jit))
        offset = (c - np.arange(1, bits.size) * 32.0) * nrz.time_step
        assert offset.size == bits.size - 1
        assert np.std(offset) == pytest.approx(0.5e-12, rel=0.05)
        np.testing.assert_allclose(
            offset, transition_times(bits.size, nrz, jit) - np.arange(1, bits.size) * nrz.bit_period,
            atol=1e-20)

    def test_level_bounds_with_jitter(self):
        nrz = NrzSpec(50e9, 16, 5e-12)
        bits = prbs_sequence(PrbsSpec(7, 5), 300)
        w = nrz_waveform(bits, nrz, JitterSpec(2e-12, 0.5e-12, 1))
        assert w.min() >= 0 and w.max() <= 1
        # mid-bit samples are settled
        np.testing.assert_array_equal(w[8::16], bits.astype(float))

    def test_jobs_invariant(self):
        nrz = NrzSpec(50e9, 4)
        bits = prbs_sequence(PrbsSpec(15, 9), 3 * _rng.CHUNK_SIZE)
        jit = JitterSpec(1e-12, 1e-12, seed=4)
        assert np.array_equal(nrz_waveform(bits, nrz, jit, jobs=1), nrz_waveform(bits, nrz, jit, jobs=6))

    @pytest.mark.parametrize("kwargs", [dict(bit_rate_hz=0), dict(samples_per_bit=3),
                                        dict(rise_fall_time_s=1e-9)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            NrzSpec(**kwargs)

    def test_negative_jitter_rejected(self):
        with pytest.raises(ValueError):
            JitterSpec(-1e-12, 0)


class TestTimeseries:
    def test_settled_matches_transfer_curve(self):
        circuit = DacCircuit.uniform(4)
        codes = np.arange(16)
        lanes = ((codes[None, :] >> np.arange(4)[:, None]) & 1).astype(float)
        p = simulate_timeseries(circuit, lanes, UNIT)
        np.testing.assert_allclose(p, transfer_curve(circuit, UNIT).powers, rtol=1e-12)

    def test_field_linear_interpolation(self):
        circuit = DacCircuit.ideal(1)
        p = simulate_timeseries(circuit, [[0.0, 0.5, 1.0]], UNIT)
        np.testing.assert_allclose(p, [0.0, 0.75 / 4, 0.75], rtol=1e-12)

    def test_lane_shape_checked(self):
        with pytest.raises(ValueError):
            simulate_timeseries(DacCircuit.ideal(4), np.zeros((3, 10)), UNIT)


class TestDetector:
    def test_dc_gain(self):
        det = DetectorSpec(responsivity_a_per_w=0.8, thermal_noise_a_per_rthz=0.0)
        i = detect(np.full(500, 1e-3), det, 1e-12)
        np.testing.assert_allclose(i, 0.8e-3, rtol=1e-12)

    def test_rise_time(self):
        det = DetectorSpec(thermal_noise_a_per_rthz=0.0, bandwidth_hz=20e9)
        dt = 1 / 1.6e12
        p = np.r_[np.zeros(100), np.ones(4000)]
        i = detect(p, det, dt)
        t10, t90 = crossings(i, 0.1)[0], crossings(i, 0.9)[0]
        assert (t90 - t10) * dt == pytest.approx(0.35 / 20e9, rel=0.05)

    def test_noise_sigma_chi_square(self):
        det = DetectorSpec(thermal_noise_a_per_rthz=10e-12, bandwidth_hz=40e9, seed=11)
        n = 200_000
        i = detect(np.zeros(n), det, 1 / 1.6e12)
        sigma = det.thermal_sigma_a
        assert sigma == pytest.approx(10e-12 * math.sqrt(40e9))
        s2 = np.var(i, ddof=1)
        lo, hi = stats.chi2.ppf([0.005, 0.995], n - 1) / (n - 1)
        assert lo * sigma ** 2 <= s2 <= hi * sigma ** 2

    def test_shot_noise_adds_variance(self):
        p = np.full(200_000, 1e-3)
        base = DetectorSpec(thermal_noise_a_per_rthz=0.0, seed=2)
        shot = DetectorSpec(thermal_noise_a_per_rthz=0.0, seed=2, shot_noise=True)
        assert np.std(detect(p, base, 1 / 1.6e12)) == 0.0
        expected = math.sqrt(2 * 1.602176634e-19 * 1e-3 * 40e9)
        assert np.std(detect(p, shot, 1 / 1.6e12)) == pytest.approx(expected, rel=0.02)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            detect([-1.0], DetectorSpec(), 1e-12)
        with pytest.raises(ValueError):
            detect([1.0, 1.0], DetectorSpec(bandwidth_hz=1e12), 1e-12)

    @pytest.mark.parametrize("kwargs", [dict(responsivity_a_per_w=0), dict(bandwidth_hz=-1),
                                        dict(thermal_noise_a_per_rthz=-1), dict(min_detectable_power_w=0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            DetectorSpec(**kwargs)


class TestEye:
    def test_counts_conserved(self):
        nrz = NrzSpec(samples_per_bit=16)
        x = np.random.default_rng(0).random(16 * 101)
        eye = eye_accumulate(x, nrz, time_bins=32, amp_bins=20)
        assert eye.total == x.size
        assert eye.histogram.shape == (32, 20)

    def test_fold_two_ui(self):
        nrz = NrzSpec(samples_per_bit=8)
        x = np.tile(np.arange(16, dtype=float), 10)
        eye = eye_accumulate(x, nrz, time_bins=16, amp_bins=16, amp_range=(-0.5, 15.5))
        np.testing.assert_array_equal(eye.histogram, 10 * np.eye(16, dtype=np.int64))

    def test_constant_input(self):
        eye = eye_accumulate(np.ones(64), NrzSpec(samples_per_bit=8), 8, 4)
        assert eye.total == 64

    def test_too_short(self):
        with pytest.raises(ValueError):
            eye_accumulate(np.ones(10), NrzSpec(samples_per_bit=8))
        with pytest.raises(ValueError):
            eye_accumulate([], NrzSpec())


class TestRunWaveform:
    def test_codes_from_prbs_words(self):
        circuit = DacCircuit.uniform(4)
        run = run_waveform(circuit, UNIT, PrbsSpec(7, 1), NrzSpec(samples_per_bit=8), NO_JITTER,
                           DetectorSpec(thermal_noise_a_per_rthz=0.0), 50)
        raw = prbs_sequence(PrbsSpec(7, 1), 200).reshape(50, 4)
        np.testing.assert_array_equal(run.codes, raw @ [1, 2, 4, 8])
        mid = run.optical_power[4::8]
        np.testing.assert_allclose(mid, transfer_curve(circuit, UNIT).powers[run.codes], rtol=1e-12)

    def test_reproducible(self):
        args = (DacCircuit.uniform(4), UNIT, PrbsSpec(), NrzSpec(samples_per_bit=8), JitterSpec(seed=2),
                DetectorSpec(seed=3), 64)
        a, b = run_waveform(*args), run_waveform(*args, jobs=4)
        assert np.array_equal(a.photocurrent, b.photocurrent)
        assert np.array_equal(a.drive, b.drive)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=2, max_size=40), st.floats(0, 15e-12), st.floats(0, 3e-12))
def test_nrz_bounded_and_settled(bits, rise, pkpk):
    nrz = NrzSpec(50e9, 16, rise)
    w = nrz_waveform(bits, nrz, JitterSpec(pkpk, 0.0))
    assert np.all((w >= 0) & (w <= 1))
    np.testing.assert_array_equal(w[8::16], np.asarray(bits, float))
