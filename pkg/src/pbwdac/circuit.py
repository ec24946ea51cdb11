"""Static optical model of the coherent binary-weighted photonic DAC.

A cw carrier is tapped by a chain of unbalanced directional couplers, each
branch is gated by an electro-absorption modulator, state-dependent phase
is trimmed by a phase shifter, and the branches are summed coherently in a
balanced tree of Y-combiners.

Bit ``i`` runs from 1 (LSB) to ``n_bits`` (MSB).  Lane/array index ``i - 1``
always refers to bit ``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

DEFAULT_WAVELENGTH_M = 1550e-9
MAX_ENUMERATED_BITS = 24
_LN10 = math.log(10.0)


class WeightConvention(str, Enum):
    """How the splitter-chain weight ``r (1-r)^(N-i)`` is applied."""

    POWER_SPLIT = "POWER_SPLIT"
    VERBATIM_FIELD = "VERBATIM_FIELD"


class NumericalGuardError(ValueError):
    """Raised when a request would exceed an enumeration or size guard."""


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def db_to_field(loss_db: float) -> float:
    """Field amplitude factor for a power loss in dB."""
    return 10.0 ** (-loss_db / 20.0)


@dataclass(frozen=True)
class OpticalField:
    """Complex field amplitude in sqrt(W) at a single wavelength."""

    amplitude: complex
    wavelength: float = DEFAULT_WAVELENGTH_M

    def __post_init__(self):
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            raise ValueError(f"wavelength must be positive, got {self.wavelength!r}")
        object.__setattr__(self, "amplitude", complex(self.amplitude))

    @classmethod
    def from_power(cls, power_w: float, wavelength: float = DEFAULT_WAVELENGTH_M,
                   phase_rad: float = 0.0) -> "OpticalField":
        if power_w < 0:
            raise ValueError("power must be non-negative")
        return cls(math.sqrt(power_w) * complex(math.cos(phase_rad), math.sin(phase_rad)),
                   wavelength)

    def power(self) -> float:
        return abs(self.amplitude) ** 2


@dataclass(frozen=True)
class CouplerSpec:
    split_ratio_r: float = 0.75
    excess_loss_db: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.split_ratio_r < 1.0:
            raise ValueError(f"split_ratio_r must lie in (0, 1), got {self.split_ratio_r!r}")
        if not self.excess_loss_db >= 0:
            raise ValueError(f"excess_loss_db must be >= 0, got {self.excess_loss_db!r}")


@dataclass(frozen=True)
class PhysicalModulator:
    """Effective extinction coefficients of the absorber in each state."""

    kappa_eff_on: float
    kappa_eff_off: float
    length_m: float

    def __post_init__(self):
        for name in ("kappa_eff_on", "kappa_eff_off", "length_m"):
            _check_finite(name, getattr(self, name))
        if not self.kappa_eff_off >= self.kappa_eff_on >= 0:
            raise ValueError("need kappa_eff_off >= kappa_eff_on >= 0")
        if not self.length_m > 0:
            raise ValueError("length_m must be positive")


def er_from_physical(kappa_on: float, kappa_off: float, length_m: float,
                     wavelength: float) -> float:
    """Extinction ratio in dB implied by the absorber extinction contrast."""
    for name, v in (("kappa_on", kappa_on), ("kappa_off", kappa_off),
                    ("length_m", length_m), ("wavelength", wavelength)):
        _check_finite(name, v)
    if not kappa_off >= kappa_on >= 0:
        raise ValueError("need kappa_off >= kappa_on >= 0")
    if length_m <= 0 or wavelength <= 0:
        raise ValueError("length_m and wavelength must be positive")
    exponent = 2.0 * math.pi / wavelength * (kappa_off - kappa_on) * length_m
    return exponent * 20.0 / _LN10


def kappa_contrast_for_er(extinction_ratio_db: float, length_m: float,
                          wavelength: float) -> float:
    """Inverse of :func:`er_from_physical`: required ``kappa_off - kappa_on``."""
    _check_finite("extinction_ratio_db", extinction_ratio_db)
    return extinction_ratio_db * _LN10 / 20.0 * wavelength / (2.0 * math.pi * length_m)


@dataclass(frozen=True)
class ModulatorSpec:
    """Two-state electro-absorption modulator.

    ``extinction_ratio_db`` may be ``math.inf`` for a perfect absorber.
    When ``physical`` is given the transmission magnitudes come from the
    extinction coefficients and a wavelength is required to evaluate them;
    use :meth:`check_physical` to verify the declared extinction ratio.
    """

    extinction_ratio_db: float = 4.6
    insertion_loss_db: float = 0.0
    phase_on_rad: float = 0.0
    phase_off_rad: float = 0.0
    physical: PhysicalModulator | None = None

    def __post_init__(self):
        if not self.extinction_ratio_db > 0:
            raise ValueError(f"extinction_ratio_db must be > 0, got {self.extinction_ratio_db!r}")
        if not (self.insertion_loss_db >= 0 and math.isfinite(self.insertion_loss_db)):
            raise ValueError(f"insertion_loss_db must be finite and >= 0, got {self.insertion_loss_db!r}")
        _check_finite("phase_on_rad", self.phase_on_rad)
        _check_finite("phase_off_rad", self.phase_off_rad)

    @classmethod
    def from_physical(cls, kappa_on: float, kappa_off: float, length_m: float,
                      wavelength: float = DEFAULT_WAVELENGTH_M,
                      phase_on_rad: float = 0.0, phase_off_rad: float = 0.0) -> "ModulatorSpec":
        phys = PhysicalModulator(kappa_on, kappa_off, length_m)
        er = er_from_physical(kappa_on, kappa_off, length_m, wavelength)
        il = er_from_physical(0.0, kappa_on, length_m, wavelength)
        return cls(er, il, phase_on_rad, phase_off_rad, phys)

    def check_physical(self, wavelength: float, tol_db: float = 1e-9) -> None:
        if self.physical is None:
            return
        p = self.physical
        er = er_from_physical(p.kappa_eff_on, p.kappa_eff_off, p.length_m, wavelength)
        if abs(er - self.extinction_ratio_db) > tol_db:
            raise ValueError(
                f"physical parameters give ER {er:.12g} dB, declared {self.extinction_ratio_db:.12g} dB")


@dataclass(frozen=True)
class PhaseShifterSpec:
    """Branch phase shifter, engaged when the bit is '0'.

    ``phase_rad=None`` selects exact compensation of the modulator's
    state-dependent phase (``phase_on - phase_off``).
    """

    phase_rad: float | None = None
    drive_power_w: float = 0.0

    def __post_init__(self):
        if not self.drive_power_w >= 0:
            raise ValueError("drive_power_w must be >= 0")


def modulator_transmission(spec: ModulatorSpec, bit: int,
                           wavelength: float | None = None) -> complex:
    """Complex field transmission of one modulator in state ``bit``."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    phase = spec.phase_on_rad if bit else spec.phase_off_rad
    if spec.physical is not None:
        if wavelength is None:
            raise ValueError("a wavelength is required for a physically parameterized modulator")
        p = spec.physical
        kappa = p.kappa_eff_on if bit else p.kappa_eff_off
        mag = math.exp(-2.0 * math.pi / wavelength * kappa * p.length_m)
    else:
        loss = spec.insertion_loss_db if bit else spec.insertion_loss_db + spec.extinction_ratio_db
        mag = db_to_field(loss)
    return mag * complex(math.cos(phase), math.sin(phase))


@dataclass(frozen=True)
class DigitalCode:
    value: int
    n_bits: int

    def __post_init__(self):
        if self.n_bits < 1:
            raise ValueError("n_bits must be >= 1")
        if not 0 <= self.value < (1 << self.n_bits):
            raise ValueError(f"code {self.value} out of range for {self.n_bits} bits")

    def bit(self, i: int) -> int:
        if not 1 <= i <= self.n_bits:
            raise IndexError(i)
        return (self.value >> (i - 1)) & 1

    def bits(self) -> list[int]:
        """Bits ordered LSB first (bit 1 .. bit N)."""
        return [self.bit(i) for i in range(1, self.n_bits + 1)]


def _as_tuple(items, n, default):
    if items is None:
        return tuple(default for _ in range(n))
    return tuple(items)


@dataclass(frozen=True)
class DacCircuit:
    """Full parameterization of an N-bit coherent binary-weighted DAC."""

    n_bits: int = 4
    coupler: CouplerSpec = field(default_factory=CouplerSpec)
    modulators: Sequence[ModulatorSpec] | None = None
    phase_shifters: Sequence[PhaseShifterSpec] | None = None
    combiner_excess_loss_db: float = 0.0
    io_coupling_loss_db: float = 0.0
    weight_convention: WeightConvention = WeightConvention.POWER_SPLIT
    residual_phase_rad: Sequence[float] | None = None
    depth_equalization: bool = True

    def __post_init__(self):
        n = self.n_bits
        if not (isinstance(n, (int, np.integer)) and n >= 1):
            raise ValueError(f"n_bits must be a positive integer, got {n!r}")
        object.__setattr__(self, "n_bits", int(n))
        object.__setattr__(self, "modulators", _as_tuple(self.modulators, n, ModulatorSpec()))
        object.__setattr__(self, "phase_shifters",
                           _as_tuple(self.phase_shifters, n, PhaseShifterSpec()))
        object.__setattr__(self, "residual_phase_rad",
                           tuple(float(p) for p in _as_tuple(self.residual_phase_rad, n, 0.0)))
        object.__setattr__(self, "weight_convention", WeightConvention(self.weight_convention))
        for name in ("modulators", "phase_shifters", "residual_phase_rad"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have length n_bits={n}")
        for name in ("combiner_excess_loss_db", "io_coupling_loss_db"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")
        if self.tree_padded and not self.depth_equalization:
            raise ValueError(
                f"n_bits={n} is not a power of two; a balanced combiner tree needs depth_equalization")

    @classmethod
    def uniform(cls, n_bits: int = 4, split_ratio_r: float = 0.75,
                extinction_ratio_db: float = 4.6, insertion_loss_db: float = 0.0,
                phase_on_rad: float = 0.0, phase_off_rad: float = 0.0,
                coupler_excess_loss_db: float = 0.0, residual_phase_rad: float | Sequence[float] = 0.0,
                **kwargs) -> "DacCircuit":
        """Circuit with identical modulators on every branch."""
        mod = ModulatorSpec(extinction_ratio_db, insertion_loss_db, phase_on_rad, phase_off_rad)
        if np.isscalar(residual_phase_rad):
            residual_phase_rad = [float(residual_phase_rad)] * n_bits
        return cls(n_bits=n_bits, coupler=CouplerSpec(split_ratio_r, coupler_excess_loss_db),
                   modulators=[mod] * n_bits, residual_phase_rad=residual_phase_rad, **kwargs)

    @classmethod
    def ideal(cls, n_bits: int = 4, **kwargs) -> "DacCircuit":
        """Infinite extinction, no losses, no residual phase."""
        return cls.uniform(n_bits, extinction_ratio_db=math.inf, **kwargs)

    @property
    def tree_depth(self) -> int:
        return (self.n_bits - 1).bit_length()

    @property
    def tree_padded(self) -> bool:
        return self.n_bits & (self.n_bits - 1) != 0

    def metadata(self) -> dict:
        # off-state leakage relative to the on state, in both field and power terms
        t_off = [db_to_field(m.extinction_ratio_db) for m in self.modulators]
        return {"n_bits": self.n_bits, "tree_depth": self.tree_depth,
                "depth_equalization_padding": self.tree_padded,
                "weight_convention": self.weight_convention.value,
                "off_state_leakage_field": t_off,
                "off_state_leakage_power": [t * t for t in t_off]}


def _splitter_factors(circuit: DacCircuit) -> np.ndarray:
    """Real field factor per branch (index i-1), including coupler excess loss."""
    n = circuit.n_bits
    r = circuit.coupler.split_ratio_r
    i = np.arange(1, n + 1)
    frac = r * (1.0 - r) ** (n - i)
    weight = np.sqrt(frac) if circuit.weight_convention is WeightConvention.POWER_SPLIT else frac
    n_couplers = n - i + 1
    return weight * db_to_field(circuit.coupler.excess_loss_db) ** n_couplers


def branch_weights(circuit: DacCircuit, input: OpticalField) -> np.ndarray:
    """Complex field launched into each branch, index ``i - 1`` for bit ``i``.

    Branch ``i`` traverses ``N - i + 1`` couplers; the residual
    ``(1 - r)^N`` of the chain is dumped.
    """
    return _splitter_factors(circuit) * input.amplitude


def _combiner_stage_factor(circuit: DacCircuit) -> float:
    return db_to_field(circuit.combiner_excess_loss_db) / math.sqrt(2.0)


def _compensated_states(circuit: DacCircuit, wavelength: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-branch complex factors (off, on): modulator, phase trim and residual phase."""
    off = np.empty(circuit.n_bits, dtype=complex)
    on = np.empty(circuit.n_bits, dtype=complex)
    for k, (mod, ps, resid) in enumerate(zip(circuit.modulators, circuit.phase_shifters,
                                             circuit.residual_phase_rad)):
        mod.check_physical(wavelength)
        t_on = modulator_transmission(mod, 1, wavelength)
        t_off = modulator_transmission(mod, 0, wavelength)
        trim = mod.phase_on_rad - mod.phase_off_rad if ps.phase_rad is None else ps.phase_rad
        rot = complex(math.cos(resid), math.sin(resid))
        on[k] = t_on * rot
        off[k] = t_off * complex(math.cos(trim), math.sin(trim)) * rot
    return off, on


def branch_state_fields(circuit: DacCircuit, input: OpticalField) -> tuple[np.ndarray, np.ndarray]:
    """Output-referred field contributed by each branch in its '0' and '1' state.

    Includes splitting, modulation, phase trim, the combiner tree and both
    I/O couplers, so that the output field for drive levels ``d`` is
    ``sum(off + d * (on - off))``.
    """
    off, on = _compensated_states(circuit, input.wavelength)
    w = branch_weights(circuit, input)
    g = _combiner_stage_factor(circuit) ** circuit.tree_depth
    g *= db_to_field(circuit.io_coupling_loss_db) ** 2
    return w * off * g, w * on * g


def _tree_combine(fields: list[complex], stage: float) -> complex:
    """Pairwise Y-junction reduction; an unpaired input passes a matched dummy stage."""
    while len(fields) > 1:
        nxt = [(fields[k] + fields[k + 1]) * stage for k in range(0, len(fields) - 1, 2)]
        if len(fields) % 2:
            nxt.append(fields[-1] * stage)
        fields = nxt
    return fields[0]


def evaluate_code(circuit: DacCircuit, code: DigitalCode | int,
                  input: OpticalField) -> OpticalField:
    """Coherent output field for one digital code."""
    if not isinstance(code, DigitalCode):
        code = DigitalCode(int(code), circuit.n_bits)
    if code.n_bits != circuit.n_bits:
        raise ValueError(f"code has {code.n_bits} bits, circuit has {circuit.n_bits}")
    off, on = _compensated_states(circuit, input.wavelength)
    io = db_to_field(circuit.io_coupling_loss_db)
    launched = branch_weights(circuit, OpticalField(input.amplitude * io, input.wavelength))
    branch = [launched[k] * (on[k] if b else off[k]) for k, b in enumerate(code.bits())]
    out = _tree_combine(branch, _combiner_stage_factor(circuit)) * io
    return OpticalField(out, input.wavelength)


def code_bits(codes: np.ndarray, n_bits: int) -> np.ndarray:
    """Bit matrix of shape (len(codes), n_bits), column ``i - 1`` is bit ``i``."""
    codes = np.asarray(codes, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n_bits, dtype=np.int64)) & 1).astype(float)


def fields_for_codes(circuit: DacCircuit, codes, input: OpticalField,
                     chunk: int = 1 << 18) -> np.ndarray:
    """Vectorized output fields for an array of codes."""
    codes = np.asarray(codes, dtype=np.int64).ravel()
    if codes.size and (codes.min() < 0 or codes.max() >= (1 << circuit.n_bits)):
        raise ValueError("code out of range")
    off, on = branch_state_fields(circuit, input)
    base = off.sum()
    delta = on - off
    out = np.empty(codes.size, dtype=complex)
    for start in range(0, codes.size, chunk):
        sl = slice(start, start + chunk)
        out[sl] = base + code_bits(codes[sl], circuit.n_bits) @ delta
    return out


@dataclass(frozen=True)
class TransferCurve:
    """Output optical power for a set of codes (dense when all 2^N are present)."""

    n_bits: int
    codes: np.ndarray
    powers: np.ndarray
    fields: np.ndarray | None = None

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        powers = np.asarray(self.powers, dtype=float)
        if codes.shape != powers.shape or codes.ndim != 1:
            raise ValueError("codes and powers must be 1-D arrays of equal length")
        if np.any(powers < 0):
            raise ValueError("powers must be non-negative")
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "powers", powers)

    @classmethod
    def from_powers(cls, powers, n_bits: int | None = None) -> "TransferCurve":
        powers = np.asarray(powers, dtype=float)
        if n_bits is None:
            n_bits = max(int(round(math.log2(len(powers)))), 1)
        return cls(n_bits, np.arange(len(powers)), powers)

    @property
    def is_dense(self) -> bool:
        n = 1 << self.n_bits
        return self.codes.size == n and bool(np.all(self.codes == np.arange(n)))


def transfer_curve(circuit: DacCircuit, input: OpticalField, codes=None) -> TransferCurve:
    """Output power for every code (or a caller-supplied subset)."""
    if codes is None:
        if circuit.n_bits > MAX_ENUMERATED_BITS:
            raise NumericalGuardError(
                f"exhaustive enumeration limited to {MAX_ENUMERATED_BITS} bits; pass a code subset")
        codes = np.arange(1 << circuit.n_bits, dtype=np.int64)
    codes = np.asarray(codes, dtype=np.int64)
    fields = fields_for_codes(circuit, codes, input)
    return TransferCurve(circuit.n_bits, codes, np.abs(fields) ** 2, fields)
