"""Time-domain drive of the DAC: PRBS -> NRZ with jitter -> optics -> detector -> eye."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from . import _rng
from .circuit import DacCircuit, OpticalField, branch_state_fields

# feedback taps (n, m) of x^n + x^m + 1
PRBS_TAPS = {7: (7, 6), 15: (15, 14), 23: (23, 18), 31: (31, 28)}

ELECTRON_CHARGE = 1.602176634e-19


@dataclass(frozen=True)
class PrbsSpec:
    order: int = 7
    seed: int = 1

    def __post_init__(self):
        if self.order not in PRBS_TAPS:
            raise ValueError(f"PRBS order must be one of {sorted(PRBS_TAPS)}, got {self.order!r}")
        if self.seed == 0:
            raise ValueError("PRBS seed must be nonzero (the all-zero state is absorbing)")
        if not 0 < self.seed < (1 << self.order):
            raise ValueError(f"PRBS seed must fit in {self.order} bits")


@dataclass(frozen=True)
class NrzSpec:
    bit_rate_hz: float = 50e9
    samples_per_bit: int = 32
    rise_fall_time_s: float = 0.0

    def __post_init__(self):
        if not self.bit_rate_hz > 0:
            raise ValueError("bit_rate_hz must be positive")
        if int(self.samples_per_bit) != self.samples_per_bit or self.samples_per_bit < 4:
            raise ValueError("samples_per_bit must be an integer >= 4")
        if not 0 <= self.rise_fall_time_s < self.bit_period:
            raise ValueError("rise_fall_time_s must be >= 0 and shorter than one bit period")

    @property
    def bit_period(self) -> float:
        return 1.0 / self.bit_rate_hz

    @property
    def time_step(self) -> float:
        return 1.0 / (self.bit_rate_hz * self.samples_per_bit)


@dataclass(frozen=True)
class JitterSpec:
    deterministic_pkpk_s: float = 1e-12
    random_rms_s: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if not (self.deterministic_pkpk_s >= 0 and self.random_rms_s >= 0):
            raise ValueError("jitter amplitudes must be non-negative")


@dataclass(frozen=True)
class DetectorSpec:
    responsivity_a_per_w: float = 1.0
    thermal_noise_a_per_rthz: float = 10e-12
    bandwidth_hz: float = 40e9
    min_detectable_power_w: float = 100e-9
    seed: int = 0
    shot_noise: bool = False

    def __post_init__(self):
        if not self.responsivity_a_per_w > 0:
            raise ValueError("responsivity_a_per_w must be positive")
        if not self.thermal_noise_a_per_rthz >= 0:
            raise ValueError("thermal_noise_a_per_rthz must be >= 0")
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth_hz must be positive")
        if not self.min_detectable_power_w > 0:
            raise ValueError("min_detectable_power_w must be positive")

    @property
    def thermal_sigma_a(self) -> float:
        return self.thermal_noise_a_per_rthz * math.sqrt(self.bandwidth_hz)


def prbs_sequence(spec: PrbsSpec, length: int) -> np.ndarray:
    """Maximal-length LFSR output; the first ``order`` bits are the seed, LSB first."""
    if length < 1:
        raise ValueError("length must be >= 1")
    n, m = PRBS_TAPS[spec.order]
    total = max(length, n)
    s = np.zeros(total, dtype=np.uint8)
    s[:n] = [(spec.seed >> j) & 1 for j in range(n)]
    # s[k] = s[k-n] ^ s[k-m]; the shortest lag is m, so m bits can be produced at once
    k = n
    while k < total:
        step = min(m, total - k)
        s[k:k + step] = s[k - n:k - n + step] ^ s[k - m:k - m + step]
        k += step
    return s[:length]


def transition_times(n_bits: int, nrz: NrzSpec, jitter: JitterSpec, stream: int = 0,
                     jobs: int = 1) -> np.ndarray:
    """Jittered time of every bit boundary ``k = 1 .. n_bits - 1`` (array index ``k - 1``).

    Deterministic jitter alternates ``+pkpk/2`` on even and ``-pkpk/2`` on odd
    boundaries; random jitter is Gaussian and drawn per boundary.
    """
    k = np.arange(1, n_bits, dtype=float)
    half = jitter.deterministic_pkpk_s / 2.0
    det = np.where(np.arange(1, n_bits) % 2 == 0, half, -half)
    t = k * nrz.bit_period + det
    if jitter.random_rms_s > 0:
        t = t + jitter.random_rms_s * _rng.standard_normal(jitter.seed, n_bits - 1, stream, jobs)
    return t


def nrz_waveform(bits, nrz: NrzSpec, jitter: JitterSpec, stream: int = 0,
                 jobs: int = 1) -> np.ndarray:
    """Sampled drive level in [0, 1], ``samples_per_bit`` samples per bit.

    Each edge is a linear ramp centred on its jittered transition time; the
    ramp's 10-90 % duration equals ``rise_fall_time_s``.  An edge is assumed
    to finish within one bit period of its nominal time.
    """
    b = np.asarray(bits, dtype=float)
    n = b.size
    spb = int(nrz.samples_per_bit)
    # edge positions in units of samples; exact on the grid when jitter is zero
    tau = np.arange(n + 1, dtype=float) * spb
    if n > 1:
        k = np.arange(1, n)
        tau[1:n] += (transition_times(n, nrz, jitter, stream, jobs) - k * nrz.bit_period) / nrz.time_step
    step = np.zeros(n + 1)
    step[1:n] = np.diff(b)
    width = nrz.rise_fall_time_s / 0.8 / nrz.time_step

    s = np.arange(n * spb)
    slot = s // spb
    level = b[np.clip(slot - 2, 0, n - 1)]
    for offset in (-1, 0, 1, 2):
        k = np.clip(slot + offset, 0, n)
        dt = s - tau[k]
        # sub-sample widths behave as ideal steps
        if width > 1e-9:
            ramp = np.clip(dt / width + 0.5, 0.0, 1.0)
        else:
            ramp = (dt >= 0).astype(float)
        level = level + step[k] * ramp * ((slot + offset >= 1) & (slot + offset <= n - 1))
    return np.clip(level, 0.0, 1.0)


def simulate_fields(circuit: DacCircuit, lane_waveforms, input: OpticalField) -> np.ndarray:
    lanes = np.asarray(lane_waveforms, dtype=float)
    if lanes.ndim != 2 or lanes.shape[0] != circuit.n_bits:
        raise ValueError(f"expected {circuit.n_bits} lanes of equal length, got shape {lanes.shape}")
    off, on = branch_state_fields(circuit, input)
    return off.sum() + lanes.T @ (on - off)


def simulate_timeseries(circuit: DacCircuit, lane_waveforms, input: OpticalField) -> np.ndarray:
    """Quasi-static output power for per-lane drive levels (lane ``i - 1`` drives bit ``i``).

    Each modulator's field transmission is interpolated linearly between its
    '0' and '1' states by the drive level.
    """
    return np.abs(simulate_fields(circuit, lane_waveforms, input)) ** 2


def detect(power_samples, det: DetectorSpec, time_step_s: float, jobs: int = 1) -> np.ndarray:
    """Photocurrent: responsivity, single-pole low-pass, additive Gaussian noise."""
    p = np.asarray(power_samples, dtype=float)
    if p.size == 0:
        return p.copy()
    if np.any(p < 0):
        raise ValueError("optical power must be non-negative")
    fs = 1.0 / time_step_s
    if det.bandwidth_hz >= fs / 2:
        raise ValueError("detector bandwidth must be below the Nyquist frequency of the sampling")
    b, a = signal.butter(1, det.bandwidth_hz, fs=fs)
    i_sig = det.responsivity_a_per_w * p
    filtered, _ = signal.lfilter(b, a, i_sig, zi=signal.lfilter_zi(b, a) * i_sig[0])
    current = filtered
    sigma = det.thermal_sigma_a
    if sigma > 0:
        current = current + sigma * _rng.standard_normal(det.seed, p.size, 0, jobs)
    if det.shot_noise:
        shot_sigma = np.sqrt(2.0 * ELECTRON_CHARGE * np.clip(filtered, 0, None) * det.bandwidth_hz)
        current = current + shot_sigma * _rng.standard_normal(det.seed, p.size, 1, jobs)
    return current


@dataclass
class EyeDiagram:
    histogram: np.ndarray
    time_bins: int
    amp_bins: int
    amp_range: tuple[float, float]

    @property
    def total(self) -> int:
        return int(self.histogram.sum())


def eye_accumulate(samples, nrz: NrzSpec, time_bins: int = 64, amp_bins: int = 128,
                   amp_range: tuple[float, float] | None = None) -> EyeDiagram:
    """Fold samples modulo two unit intervals into a (time, amplitude) histogram."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("no samples to accumulate")
    spb = int(nrz.samples_per_bit)
    if x.size < 2 * spb:
        raise ValueError("need at least two unit intervals of samples")
    if amp_range is None:
        lo, hi = float(x.min()), float(x.max())
        if hi == lo:
            pad = 0.5 * abs(lo) if lo else 0.5
            lo, hi = lo - pad, hi + pad
        amp_range = (lo, hi)
    phase = np.arange(x.size) % (2 * spb)
    t_idx = phase * time_bins // (2 * spb)
    hist, _, _ = np.histogram2d(t_idx, x, bins=[time_bins, amp_bins],
                                range=[[0, time_bins], list(amp_range)])
    return EyeDiagram(hist.astype(np.int64), time_bins, amp_bins, tuple(amp_range))


@dataclass
class WaveformRun:
    time_step_s: float
    drive: np.ndarray
    optical_power: np.ndarray
    photocurrent: np.ndarray
    codes: np.ndarray
    seeds: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.optical_power.size
        if self.drive.shape[1] != n or self.photocurrent.size != n:
            raise ValueError("waveform arrays must share one length")


def run_waveform(circuit: DacCircuit, input: OpticalField, prbs: PrbsSpec, nrz: NrzSpec,
                 jitter: JitterSpec, det: DetectorSpec, n_symbols: int,
                 jobs: int = 1) -> WaveformRun:
    """Drive all lanes from consecutive N-bit words of one PRBS stream.

    Lane ``i - 1`` carries bit ``i`` of each word and gets its own random
    jitter stream (stream index = lane index).
    """
    n = circuit.n_bits
    raw = prbs_sequence(prbs, n_symbols * n).reshape(n_symbols, n)
    codes = raw @ (1 << np.arange(n))
    drive = np.vstack([nrz_waveform(raw[:, lane], nrz, jitter, stream=lane, jobs=jobs)
                       for lane in range(n)])
    power = simulate_timeseries(circuit, drive, input)
    current = detect(power, det, nrz.time_step, jobs=jobs)
    seeds = {"prbs": prbs.seed, "jitter": jitter.seed, "detector": det.seed}
    return WaveformRun(nrz.time_step, drive, power, current, codes, seeds)
