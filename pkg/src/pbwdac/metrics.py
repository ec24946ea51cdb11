"""Static (DNL/INL) and dynamic (SINAD/ENOB) converter metrics.

All metrics can be evaluated on the detected optical POWER (default) or on
the FIELD magnitude, i.e. ``sqrt(power)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np
from scipy.signal import windows

from .circuit import DacCircuit, OpticalField, TransferCurve, fields_for_codes
from .waveform import simulate_timeseries

__all__ = [
    "AnalysisDomain", "LsbDefinition", "LinearFit", "DacStaticReport", "DacDynamicReport",
    "TransferCurve", "best_fit_line", "dnl", "inl", "static_report", "sine_test", "spectrum",
    "sinad_enob", "dynamic_report", "enob_from_sinad",
]


class LsbDefinition(str, Enum):
    BEST_FIT_SLOPE = "BEST_FIT_SLOPE"
    ENDPOINT = "ENDPOINT"


class AnalysisDomain(str, Enum):
    POWER = "POWER"
    FIELD = "FIELD"


def _domain_values(values, domain) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if AnalysisDomain(domain) is AnalysisDomain.FIELD:
        return np.sqrt(np.clip(v, 0.0, None))
    return v


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    residual_rms: float

    def __call__(self, codes):
        return self.intercept + self.slope * np.asarray(codes, dtype=float)


def _fit_xy(x: np.ndarray, y: np.ndarray) -> LinearFit:
    if x.size < 2:
        raise ValueError("a line fit needs at least two points")
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = np.dot(dx, dx)
    if sxx == 0:
        raise ValueError("a line fit needs at least two distinct codes")
    slope = np.dot(dx, y - ym) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    return LinearFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2))))


def best_fit_line(curve: TransferCurve, domain=AnalysisDomain.POWER) -> LinearFit:
    """Ordinary least-squares line of output against code."""
    return _fit_xy(curve.codes.astype(float), _domain_values(curve.powers, domain))


def _require_dense(curve: TransferCurve) -> None:
    if not curve.is_dense:
        raise ValueError("DNL/INL need a dense transfer curve covering every code")


def _reference(curve: TransferCurve, lsb_definition, domain) -> tuple[np.ndarray, float, float]:
    """Analysed values, reference-line intercept and LSB size."""
    y = _domain_values(curve.powers, domain)
    if LsbDefinition(lsb_definition) is LsbDefinition.ENDPOINT:
        lsb = (y[-1] - y[0]) / (y.size - 1)
        return y, float(y[0]), float(lsb)
    fit = _fit_xy(curve.codes.astype(float), y)
    return y, fit.intercept, fit.slope


def dnl(curve: TransferCurve, lsb_definition=LsbDefinition.BEST_FIT_SLOPE,
        domain=AnalysisDomain.POWER) -> np.ndarray:
    """Per-transition differential nonlinearity in LSB (``2^N - 1`` entries)."""
    _require_dense(curve)
    y, _, lsb = _reference(curve, lsb_definition, domain)
    if lsb == 0:
        raise ValueError("zero LSB: the transfer curve is flat")
    return np.diff(y) / lsb - 1.0


def inl(curve: TransferCurve, lsb_definition=LsbDefinition.BEST_FIT_SLOPE,
        domain=AnalysisDomain.POWER) -> np.ndarray:
    """Per-code integral nonlinearity in LSB against the reference line.

    With BEST_FIT_SLOPE the reference is the least-squares line and the LSB
    its slope; with ENDPOINT the line through the first and last code.
    """
    _require_dense(curve)
    y, intercept, lsb = _reference(curve, lsb_definition, domain)
    if lsb == 0:
        raise ValueError("zero LSB: the transfer curve is flat")
    return (y - (intercept + lsb * curve.codes)) / lsb


@dataclass(frozen=True)
class DacStaticReport:
    dnl: np.ndarray
    inl: np.ndarray
    dnl_min: float
    dnl_max: float
    inl_max_abs: float
    lsb: float
    lsb_definition: LsbDefinition
    domain: AnalysisDomain

    def to_dict(self) -> dict:
        return {
            "domain": self.domain.value,
            "lsb_definition": self.lsb_definition.value,
            "lsb": self.lsb,
            "dnl_min": self.dnl_min,
            "dnl_max": self.dnl_max,
            "inl_max_abs": self.inl_max_abs,
            "dnl": self.dnl.tolist(),
            "inl": self.inl.tolist(),
        }


def static_report(curve: TransferCurve, lsb_definition=LsbDefinition.BEST_FIT_SLOPE,
                  domain=AnalysisDomain.POWER) -> DacStaticReport:
    lsb_definition = LsbDefinition(lsb_definition)
    domain = AnalysisDomain(domain)
    d = dnl(curve, lsb_definition, domain)
    i = inl(curve, lsb_definition, domain)
    _, _, lsb = _reference(curve, lsb_definition, domain)
    return DacStaticReport(d, i, float(d.min()), float(d.max()), float(np.abs(i).max()),
                           lsb, lsb_definition, domain)


def check_coherent(periods: int, record_length: int) -> None:
    if int(periods) != periods or int(record_length) != record_length:
        raise ValueError("periods and record_length must be integers")
    if not 0 < periods < record_length / 2:
        raise ValueError("periods must lie strictly between 0 and record_length / 2")
    if math.gcd(int(periods), int(record_length)) != 1:
        raise ValueError(
            f"incoherent sampling: gcd({periods}, {record_length}) != 1")


def sine_test(circuit: DacCircuit, amplitude_codes: float, periods: int, record_length: int,
              input: OpticalField | None = None, offset_codes: float | None = None,
              quantize: bool = True) -> np.ndarray:
    """Output power for a coherently sampled digital sine.

    The sine ``offset + amplitude * sin(2 pi J m / M)`` is rounded to codes and
    clipped to the code range.  With ``quantize=False`` the converter is driven
    in analog fashion instead: every lane is held at the same level
    ``x / (2^N - 1)``, which for binary weights realises the fractional code ``x``.
    """
    check_coherent(periods, record_length)
    if input is None:
        input = OpticalField.from_power(1.0)
    full = (1 << circuit.n_bits) - 1
    if offset_codes is None:
        offset_codes = full / 2.0
    m = np.arange(record_length)
    x = offset_codes + amplitude_codes * np.sin(2.0 * np.pi * periods * m / record_length)
    if quantize:
        codes = np.clip(np.rint(x), 0, full).astype(np.int64)
        return np.abs(fields_for_codes(circuit, codes, input)) ** 2
    level = np.clip(x / full, 0.0, 1.0)
    return simulate_timeseries(circuit, np.tile(level, (circuit.n_bits, 1)), input)


def spectrum(samples, coherent: bool = True) -> np.ndarray:
    """Two-sided ``|DFT|^2`` per bin.

    Rectangular window for coherent records, 4-term Blackman-Harris otherwise.
    ``spectrum(x).sum() / len(x)`` equals the energy of the windowed record.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 8:
        raise ValueError("spectrum needs at least 8 samples")
    if not coherent:
        x = x * windows.blackmanharris(x.size, sym=False)
    return np.abs(np.fft.fft(x)) ** 2


def _one_sided(spec: np.ndarray) -> np.ndarray:
    m = spec.size
    half = spec[: m // 2 + 1].copy()
    top = m // 2 if m % 2 == 0 else m // 2 + 1
    half[1:top] += spec[m - 1: m - top: -1]
    return half


def _fold(bin_: int, m: int) -> int:
    k = bin_ % m
    return m - k if k > m // 2 else k


def enob_from_sinad(sinad_db: float) -> float:
    return (sinad_db - 1.76) / 6.02


def _db(ratio: float) -> float:
    if ratio == 0:
        return -math.inf
    if math.isinf(ratio):
        return math.inf
    return 10.0 * math.log10(ratio)


@dataclass(frozen=True)
class DacDynamicReport:
    snr_db: float
    thd_db: float
    sinad_db: float
    enob: float
    spectrum: np.ndarray
    fundamental_bin: int
    harmonic_bins: tuple[int, ...]
    domain: AnalysisDomain = AnalysisDomain.POWER

    def to_dict(self, include_spectrum: bool = False) -> dict:
        d = asdict(self)
        d["domain"] = self.domain.value
        d["harmonic_bins"] = list(self.harmonic_bins)
        if include_spectrum:
            d["spectrum"] = self.spectrum.tolist()
        else:
            del d["spectrum"]
        return d


def sinad_enob(spec, fundamental_bin: int, n_harmonics: int = 5, span: int = 0,
               domain=AnalysisDomain.POWER) -> DacDynamicReport:
    """SNR, THD, SINAD and ENOB from a two-sided power spectrum.

    Harmonics 2 .. ``n_harmonics + 1`` are folded into the first Nyquist zone;
    a harmonic landing on DC or on the fundamental is skipped.  ``span`` bins
    on either side of each tone are attributed to it (use ~4 for a
    Blackman-Harris windowed record).  DC (and its ``span``) is excluded from
    the noise.
    """
    spec = np.asarray(spec, dtype=float)
    m = spec.size
    if not 0 < fundamental_bin <= m // 2:
        raise ValueError(f"fundamental bin {fundamental_bin} outside (0, {m // 2}]")
    p = _one_sided(spec)
    nyq = p.size - 1

    def tone(k):
        lo, hi = max(k - span, 0), min(k + span, nyq)
        return set(range(lo, hi + 1))

    dc_bins = tone(0)
    sig_bins = tone(fundamental_bin) - dc_bins
    harm_bins: list[int] = []
    used = dc_bins | sig_bins
    for h in range(2, n_harmonics + 2):
        k = _fold(h * fundamental_bin, m)
        if k == 0 or k == fundamental_bin or k in harm_bins:
            continue
        harm_bins.append(k)
    harm_set = set().union(*(tone(k) for k in harm_bins)) - used if harm_bins else set()

    total = p.sum()
    signal = p[sorted(sig_bins)].sum()
    dc = p[sorted(dc_bins)].sum()
    harm = p[sorted(harm_set)].sum() if harm_set else 0.0
    nad = max(total - signal - dc, 0.0)
    noise = max(nad - harm, 0.0)

    sinad_db = _db(signal / nad) if nad > 0 else math.inf
    snr_db = _db(signal / noise) if noise > 0 else math.inf
    thd_db = _db(harm / signal)
    return DacDynamicReport(snr_db, thd_db, sinad_db, enob_from_sinad(sinad_db), spec,
                            int(fundamental_bin), tuple(harm_bins), AnalysisDomain(domain))


def dynamic_report(samples, fundamental_bin: int, n_harmonics: int = 5, coherent: bool = True,
                   domain=AnalysisDomain.POWER) -> DacDynamicReport:
    """Spectrum plus SINAD/ENOB of a sampled converter output."""
    x = _domain_values(samples, domain)
    return sinad_enob(spectrum(x, coherent), fundamental_bin, n_harmonics,
                      span=0 if coherent else 4, domain=domain)
