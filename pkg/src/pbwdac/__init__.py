"""Simulator for a coherent parallel photonic binary-weighted DAC."""

from .circuit import (CouplerSpec, DacCircuit, DigitalCode, ModulatorSpec, NumericalGuardError,
                      OpticalField, PhaseShifterSpec, PhysicalModulator, TransferCurve,
                      WeightConvention, branch_weights, er_from_physical, evaluate_code,
                      modulator_transmission, transfer_curve)
from .design import (PowerBudget, ResolutionCriterion, insertion_loss_budget,
                     laser_power_requirement, power_budget, resolution_limit)
from .estimator import LinearityAnalyzer, PhotonicDAC
from .metrics import (AnalysisDomain, DacDynamicReport, DacStaticReport, LinearFit, LsbDefinition,
                      best_fit_line, dnl, inl, sinad_enob, sine_test, spectrum, static_report)
from .waveform import (DetectorSpec, EyeDiagram, JitterSpec, NrzSpec, PrbsSpec, WaveformRun, detect,
                       eye_accumulate, nrz_waveform, prbs_sequence, simulate_timeseries)

__version__ = "0.1.0"
