"""Design-space arithmetic: laser requirement, power budget, loss budget, resolution limit."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .circuit import (MAX_ENUMERATED_BITS, DacCircuit, NumericalGuardError, OpticalField,
                      db_to_field, transfer_curve)

# Reference rows for comparison tables; carried as constants, not computed.
REFERENCE_SPEED_POWER = [
    {"name": "Electronic on-chip (Fujitsu LEIA CMOS DAC)", "speed_gs_per_s": "55-65",
     "power_w": 0.75, "efficiency_gs_per_j": 80, "footprint_mm2": 2.0, "resolution_bits": 8},
    {"name": "Electronic off-chip (TI DAC0800)", "speed_gs_per_s": 0.1,
     "power_w": 0.5, "efficiency_gs_per_j": 0.2, "footprint_mm2": 20.2, "resolution_bits": 8},
    {"name": "Electronic on-chip (28-nm CMOS distributed DAC)", "speed_gs_per_s": 100,
     "power_w": 2.5, "efficiency_gs_per_j": 40, "footprint_mm2": 1.6, "resolution_bits": 8},
    {"name": "PBW-DAC (reported)", "speed_gs_per_s": 50, "power_w": 0.45,
     "efficiency_gs_per_j": 116, "footprint_mm2": 1.2, "resolution_bits": 8},
]
REFERENCE_LINEARITY = [
    {"name": "Parallel photonic DAC (DQPSK, differential detection)", "speed_gs_per_s": 2.5,
     "dnl": 0.5, "inl": 0.5, "enob": 4.1, "resolution_bits": 4},
    {"name": "Serial photonic DAC", "speed_gs_per_s": 12.5,
     "dnl": 0.1, "inl": 0.5, "enob": 3.0, "resolution_bits": 4},
    {"name": "PBW-DAC (reported)", "speed_gs_per_s": 50,
     "dnl": 0.9, "inl": 2.0, "enob": 10.4, "resolution_bits": 8},
]
REPORTED_FOOTPRINT_MM2 = 1.2
REPORTED_ENERGY_PER_SAMPLE_J = 3e-12


def laser_power_requirement(min_detectable_w: float = 100e-9, snr_margin: float = 10.0,
                            circuit_loss_db: float = 26.0,
                            wall_plug_efficiency: float = 0.1) -> float:
    """Electrical laser power needed to hold the detector above its floor."""
    if not 0 < wall_plug_efficiency <= 1:
        raise ValueError("wall_plug_efficiency must lie in (0, 1]")
    if snr_margin < 1:
        raise ValueError("snr_margin must be >= 1")
    if circuit_loss_db < 0:
        raise ValueError("circuit_loss_db must be >= 0")
    if min_detectable_w < 0:
        raise ValueError("min_detectable_w must be >= 0")
    return min_detectable_w * snr_margin * 10.0 ** (circuit_loss_db / 10.0) / wall_plug_efficiency


@dataclass(frozen=True)
class PowerBudget:
    modulator_power_w: float
    phase_shifter_power_w: float
    driver_power_w: float
    laser_electrical_power_w: float
    total_w: float
    sample_rate_hz: float
    efficiency_gs_per_j: float
    energy_per_sample_j: float
    reported_energy_per_sample_j: float = REPORTED_ENERGY_PER_SAMPLE_J
    footprint_mm2: float = REPORTED_FOOTPRINT_MM2

    def to_dict(self) -> dict:
        return asdict(self)


def power_budget(n_bits: int = 8, per_modulator_w: float = 0.024, n_phase_shifters: int = 6,
                 per_shifter_w: float = 0.029, n_driver_arrays: int = 2,
                 per_driver_w: float = 0.030, laser_electrical_w: float | None = None,
                 sample_rate_hz: float = 50e9) -> PowerBudget:
    """Sum of modulator, phase-shifter, driver and laser power; sampling efficiency.

    ``laser_electrical_w=None`` uses :func:`laser_power_requirement` defaults.
    """
    if laser_electrical_w is None:
        laser_electrical_w = laser_power_requirement()
    vals = (n_bits, per_modulator_w, n_phase_shifters, per_shifter_w, n_driver_arrays,
            per_driver_w, laser_electrical_w)
    if any(v < 0 for v in vals):
        raise ValueError("power budget inputs must be non-negative")
    if not sample_rate_hz > 0:
        raise ValueError("sample_rate_hz must be positive")
    mod = n_bits * per_modulator_w
    ps = n_phase_shifters * per_shifter_w
    drv = n_driver_arrays * per_driver_w
    total = mod + ps + drv + laser_electrical_w
    eff = sample_rate_hz / total / 1e9 if total > 0 else math.inf
    return PowerBudget(mod, ps, drv, laser_electrical_w, total, sample_rate_hz, eff,
                       total / sample_rate_hz)


@dataclass(frozen=True)
class LossBudget:
    total_db: float
    items_db: dict
    worst_branch: int
    per_code_loss_db: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"total_db": self.total_db, "items_db": dict(self.items_db),
                "worst_branch": self.worst_branch,
                "per_code_loss_db": {str(k): v for k, v in self.per_code_loss_db.items()}}


def insertion_loss_budget(circuit: DacCircuit, itemized_losses: Mapping[str, float] | None = None,
                          per_code_max_bits: int = 12) -> LossBudget:
    """Worst-case single-branch insertion loss in dB, itemized.

    The combiner tree contributes ``10 log10(2)`` per stage for a lone active
    branch, since coherent gain needs every input lit.  The per-code
    effective loss (input to output power, all modulators in their code
    state) is included for circuits of up to ``per_code_max_bits`` bits.
    """
    extras = dict(itemized_losses or {})
    if any(v < 0 for v in extras.values()):
        raise ValueError("itemized losses must be non-negative")
    n = circuit.n_bits
    # branch i traverses N - i + 1 couplers
    coupler_db = [(n - i + 1) * circuit.coupler.excess_loss_db for i in range(1, n + 1)]
    mod_il = [m.insertion_loss_db for m in circuit.modulators]
    k = int(np.argmax(np.add(coupler_db, mod_il)))
    worst = k + 1
    items = {
        "io_coupling": 2 * circuit.io_coupling_loss_db,
        "coupler_excess": coupler_db[k],
        "modulator_insertion": mod_il[k],
        "combiner_tree": circuit.tree_depth * (circuit.combiner_excess_loss_db + 10 * math.log10(2)),
    }
    items.update(extras)
    per_code = {}
    if n <= per_code_max_bits:
        curve = transfer_curve(circuit, OpticalField.from_power(1.0))
        for c, p in zip(curve.codes.tolist(), curve.powers.tolist()):
            per_code[c] = -10 * math.log10(p) if p > 0 else math.inf
    return LossBudget(float(sum(items.values())), items, worst, per_code)


class CriterionKind(str, Enum):
    PAPER_LITERAL = "PAPER_LITERAL"
    WORST_CASE_PHASE_MONOTONICITY = "WORST_CASE_PHASE_MONOTONICITY"


class WeightDomain(str, Enum):
    FIELD = "FIELD"
    POWER = "POWER"


@dataclass(frozen=True)
class ResolutionCriterion:
    """Rule deciding whether an N-bit converter still resolves its LSB.

    PAPER_LITERAL compares the LSB's on-state contribution with the MSB's
    off-state leakage in ``weight_domain``.  WORST_CASE_PHASE_MONOTONICITY
    requires a strictly increasing transfer curve when the branches carry
    ``residual_phase_rad``; a scalar is applied with alternating sign
    (+, -, +, ... from the LSB), a sequence is used per branch as given.
    """

    kind: CriterionKind = CriterionKind.PAPER_LITERAL
    weight_domain: WeightDomain = WeightDomain.FIELD
    residual_phase_rad: float | Sequence[float] = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CriterionKind(self.kind))
        object.__setattr__(self, "weight_domain", WeightDomain(self.weight_domain))

    def describe(self) -> str:
        if self.kind is CriterionKind.PAPER_LITERAL:
            if self.weight_domain is WeightDomain.FIELD:
                return "LSB field weight 1 exceeds MSB off-state field leakage t_off * 2^(N-1)"
            return "LSB power weight 1 exceeds MSB off-state power leakage t_off^2 * 4^(N-1)"
        return "transfer curve strictly increasing over all codes with residual branch phase"

    def branch_phases(self, n_bits: int) -> list[float]:
        if np.isscalar(self.residual_phase_rad):
            phi = float(self.residual_phase_rad)
            return [phi if k % 2 == 0 else -phi for k in range(n_bits)]
        phases = [float(p) for p in self.residual_phase_rad]
        if len(phases) < n_bits:
            raise ValueError("residual_phase_rad sequence shorter than the bit count")
        return phases[:n_bits]


def _literal_ok(t_off: float, n: int, domain: WeightDomain) -> bool:
    if domain is WeightDomain.FIELD:
        return 1.0 > t_off * 2.0 ** (n - 1)
    return 1.0 > t_off ** 2 * 4.0 ** (n - 1)


def is_monotonic(circuit: DacCircuit, input: OpticalField | None = None) -> bool:
    curve = transfer_curve(circuit, input or OpticalField.from_power(1.0))
    return bool(np.all(np.diff(curve.powers) > 0))


def resolution_limit(extinction_ratio_db: float, criterion: ResolutionCriterion | None = None,
                     max_n: int = 16, split_ratio_r: float = 0.75) -> int:
    """Largest N (<= ``max_n``) for which every width 1..N meets the criterion."""
    if criterion is None:
        criterion = ResolutionCriterion()
    if not extinction_ratio_db > 0:
        raise ValueError("extinction_ratio_db must be > 0")
    if not 1 <= max_n <= MAX_ENUMERATED_BITS:
        raise NumericalGuardError(f"max_n must lie in 1..{MAX_ENUMERATED_BITS}, got {max_n}")
    t_off = db_to_field(extinction_ratio_db)
    best = 0
    for n in range(1, max_n + 1):
        if criterion.kind is CriterionKind.PAPER_LITERAL:
            ok = _literal_ok(t_off, n, criterion.weight_domain)
        else:
            circuit = DacCircuit.uniform(n, split_ratio_r=split_ratio_r,
                                         extinction_ratio_db=extinction_ratio_db,
                                         residual_phase_rad=criterion.branch_phases(n))
            ok = is_monotonic(circuit)
        if not ok:
            break
        best = n
    return best
