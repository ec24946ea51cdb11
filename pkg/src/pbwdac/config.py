"""Run configuration: a flat TOML file of dotted keys.

Example::

    circuit.n_bits = 4
    circuit.extinction_ratio_db = 4.6
    jitter.random_rms_s = 1e-12
    run.seed = 7

Every key is optional; omitted keys take the defaults in :data:`DEFAULTS`.
Seeds left unset are derived from ``run.seed`` with
:func:`pbwdac._rng.derive_seed`, keyed by the section name.
"""

from __future__ import annotations

import difflib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ._rng import derive_seed
from .circuit import (CouplerSpec, DacCircuit, ModulatorSpec, OpticalField, PhaseShifterSpec,
                      WeightConvention)
from .design import CriterionKind, ResolutionCriterion, WeightDomain
from .metrics import AnalysisDomain, LsbDefinition
from .waveform import DetectorSpec, JitterSpec, NrzSpec, PrbsSpec


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        super().__init__(message)
        self.key = key
        self.line = line

    def to_dict(self) -> dict:
        d = {"error": "config", "message": str(self)}
        if self.key is not None:
            d["key"] = self.key
        if self.line is not None:
            d["line"] = self.line
        return d


_NUM = (int, float)


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


# key -> (default, accepted types, predicate or None, requirement text)
_SCHEMA: dict[str, tuple[Any, tuple, Any, str]] = {
    "circuit.n_bits": (4, (int,), lambda v: v >= 1, "an integer >= 1"),
    "circuit.split_ratio_r": (0.75, _NUM, lambda v: 0 < v < 1, "in the open interval (0, 1)"),
    "circuit.coupler_excess_loss_db": (0.0, _NUM, _nonneg, ">= 0"),
    "circuit.extinction_ratio_db": (4.6, _NUM, _pos, "> 0 (inf allowed)"),
    "circuit.insertion_loss_db": (0.0, _NUM, lambda v: 0 <= v < math.inf, "finite and >= 0"),
    "circuit.phase_on_rad": (0.0, _NUM, math.isfinite, "finite"),
    "circuit.phase_off_rad": (0.0, _NUM, math.isfinite, "finite"),
    "circuit.phase_shifter_phase_rad": ("auto", _NUM + (str,),
                                        lambda v: v == "auto" or (not isinstance(v, str) and math.isfinite(v)),
                                        "'auto' or a finite number"),
    "circuit.phase_shifter_drive_power_w": (0.0, _NUM, _nonneg, ">= 0"),
    "circuit.combiner_excess_loss_db": (0.0, _NUM, _nonneg, ">= 0"),
    "circuit.io_coupling_loss_db": (0.0, _NUM, _nonneg, ">= 0"),
    "circuit.weight_convention": ("POWER_SPLIT", (str,),
                                  lambda v: v in WeightConvention.__members__, "POWER_SPLIT or VERBATIM_FIELD"),
    "circuit.residual_phase_rad": (0.0, _NUM + (list,), None, "a number or a list of numbers"),
    "circuit.depth_equalization": (True, (bool,), None, "a boolean"),
    "input.power_w": (1e-3, _NUM, _nonneg, ">= 0"),
    "input.wavelength_m": (1550e-9, _NUM, _pos, "> 0"),
    "prbs.order": (7, (int,), lambda v: v in (7, 15, 23, 31), "one of 7, 15, 23, 31"),
    "prbs.seed": (None, (int,), _pos, "a positive integer"),
    "nrz.bit_rate_hz": (50e9, _NUM, _pos, "> 0"),
    "nrz.samples_per_bit": (32, (int,), lambda v: v >= 4, "an integer >= 4"),
    "nrz.rise_fall_time_s": (5e-12, _NUM, _nonneg, ">= 0"),
    "jitter.deterministic_pkpk_s": (1e-12, _NUM, _nonneg, ">= 0"),
    "jitter.random_rms_s": (1e-12, _NUM, _nonneg, ">= 0"),
    "jitter.seed": (None, (int,), _nonneg, "a non-negative integer"),
    "detector.responsivity_a_per_w": (1.0, _NUM, _pos, "> 0"),
    "detector.thermal_noise_a_per_rthz": (10e-12, _NUM, _nonneg, ">= 0"),
    "detector.bandwidth_hz": (40e9, _NUM, _pos, "> 0"),
    "detector.min_detectable_power_w": (100e-9, _NUM, _pos, "> 0"),
    "detector.shot_noise": (False, (bool,), None, "a boolean"),
    "detector.seed": (None, (int,), _nonneg, "a non-negative integer"),
    "eye.n_symbols": (1016, (int,), lambda v: v >= 2, "an integer >= 2"),
    "eye.time_bins": (64, (int,), _pos, "a positive integer"),
    "eye.amp_bins": (128, (int,), _pos, "a positive integer"),
    "metrics.lsb_definition": ("BEST_FIT_SLOPE", (str,),
                               lambda v: v in LsbDefinition.__members__, "BEST_FIT_SLOPE or ENDPOINT"),
    "metrics.analysis_domain": ("POWER", (str,),
                                lambda v: v in AnalysisDomain.__members__, "POWER or FIELD"),
    "metrics.n_harmonics": (5, (int,), _nonneg, "an integer >= 0"),
    "metrics.sine_periods": (7, (int,), _pos, "a positive integer"),
    "metrics.record_length": (1024, (int,), lambda v: v >= 8, "an integer >= 8"),
    "metrics.amplitude_codes": ("full", _NUM + (str,),
                                lambda v: v == "full" or (not isinstance(v, str) and v >= 0),
                                "'full' or a number >= 0"),
    "metrics.quantize": (True, (bool,), None, "a boolean"),
    "budget.n_bits": (8, (int,), _nonneg, "an integer >= 0"),
    "budget.per_modulator_w": (0.024, _NUM, _nonneg, ">= 0"),
    "budget.n_phase_shifters": (6, (int,), _nonneg, "an integer >= 0"),
    "budget.per_shifter_w": (0.029, _NUM, _nonneg, ">= 0"),
    "budget.n_driver_arrays": (2, (int,), _nonneg, "an integer >= 0"),
    "budget.per_driver_w": (0.030, _NUM, _nonneg, ">= 0"),
    "budget.sample_rate_hz": (50e9, _NUM, _pos, "> 0"),
    "budget.snr_margin": (10.0, _NUM, lambda v: v >= 1, ">= 1"),
    "budget.circuit_loss_db": (26.0, _NUM, _nonneg, ">= 0"),
    "budget.wall_plug_efficiency": (0.1, _NUM, lambda v: 0 < v <= 1, "in (0, 1]"),
    "budget.laser_electrical_w": ("auto", _NUM + (str,),
                                  lambda v: v == "auto" or (not isinstance(v, str) and v >= 0),
                                  "'auto' or a number >= 0"),
    "budget.extra_losses_db": ({}, (dict,), lambda v: all(isinstance(x, _NUM) and x >= 0 for x in v.values()),
                               "a table of non-negative dB values"),
    "resolution.criterion": ("PAPER_LITERAL", (str,),
                             lambda v: v in CriterionKind.__members__,
                             "PAPER_LITERAL or WORST_CASE_PHASE_MONOTONICITY"),
    "resolution.weight_domain": ("FIELD", (str,), lambda v: v in WeightDomain.__members__, "FIELD or POWER"),
    "resolution.residual_phase_rad": (0.0, _NUM + (list,), None, "a number or a list of numbers"),
    "resolution.max_n": (16, (int,), _pos, "a positive integer"),
    "resolution.extinction_ratio_db": ("circuit", _NUM + (str,),
                                       lambda v: v == "circuit" or (not isinstance(v, str) and v > 0),
                                       "'circuit' or a number > 0"),
    "sweep.parameter": ("circuit.extinction_ratio_db", (str,), None, "a config key"),
    "sweep.values": ([2.0, 4.6, 10.0], (list,), lambda v: len(v) > 0, "a non-empty list"),
    "run.seed": (0, (int,), _nonneg, "a non-negative integer"),
    "run.output_dir": ("out", (str,), None, "a path"),
    "run.label": ("", (str,), None, "a string"),
    "run.jobs": (1, (int,), _pos, "a positive integer"),
}

DEFAULTS = {k: v[0] for k, v in _SCHEMA.items()}
_DICT_KEYS = {k for k, v in _SCHEMA.items() if v[1] == (dict,)}


def suggest_key(key: str) -> str | None:
    """Closest known key, matching on the full dotted name or its last part."""
    match = difflib.get_close_matches(key, list(_SCHEMA), n=1, cutoff=0.6)
    if match:
        return match[0]
    leaves = {k.rsplit(".", 1)[-1]: k for k in _SCHEMA}
    match = difflib.get_close_matches(key.rsplit(".", 1)[-1], list(leaves), n=1, cutoff=0.6)
    return leaves[match[0]] if match else None


def _flatten(tree: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict) and key not in _DICT_KEYS:
            flat.update(_flatten(v, key + "."))
        else:
            flat[key] = v
    return flat


def _check_value(key: str, value):
    _, types, pred, text = _SCHEMA[key]
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"{key} must be {text}, got {value!r}", key)
    if types == _NUM + (list,) and isinstance(value, list):
        if not all(isinstance(x, _NUM) and not isinstance(x, bool) and math.isfinite(x) for x in value):
            raise ConfigError(f"{key} must be {text}", key)
        return value
    if not isinstance(value, types):
        raise ConfigError(f"{key} must be {text}, got {value!r}", key)
    if isinstance(value, float) and math.isnan(value):
        raise ConfigError(f"{key} must be {text}, got nan", key)
    if pred is not None and not pred(value):
        raise ConfigError(f"{key} must be {text}, got {value!r}", key)
    return value


@dataclass
class RunConfig:
    """Validated configuration; ``values`` maps every dotted key to its value."""

    values: dict = field(default_factory=lambda: dict(DEFAULTS))

    def __post_init__(self):
        merged = dict(DEFAULTS)
        for key, value in self.values.items():
            if key not in _SCHEMA:
                hint = suggest_key(key)
                msg = f"unknown key {key!r}" + (f"; did you mean {hint!r}?" if hint else "")
                raise ConfigError(msg, key)
            if value is None and DEFAULTS[key] is None:
                continue
            merged[key] = _check_value(key, value)
        self.values = merged
        self._build()

    def __getitem__(self, key):
        return self.values[key]

    def with_overrides(self, overrides: dict) -> "RunConfig":
        return RunConfig({**self.values, **overrides})

    def _section(self, section: str, build):
        try:
            return build()
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{section}: {exc}", section) from exc

    def _build(self):
        self.circuit = self._section("circuit", self._make_circuit)
        self.input_field = self._section("input", lambda: OpticalField.from_power(
            self["input.power_w"], self["input.wavelength_m"]))
        self.prbs = self._section("prbs", self._make_prbs)
        self.nrz = self._section("nrz", lambda: NrzSpec(
            self["nrz.bit_rate_hz"], self["nrz.samples_per_bit"], self["nrz.rise_fall_time_s"]))
        self.jitter = self._section("jitter", lambda: JitterSpec(
            self["jitter.deterministic_pkpk_s"], self["jitter.random_rms_s"], self.seed_for("jitter")))
        self.detector = self._section("detector", lambda: DetectorSpec(
            self["detector.responsivity_a_per_w"], self["detector.thermal_noise_a_per_rthz"],
            self["detector.bandwidth_hz"], self["detector.min_detectable_power_w"],
            self.seed_for("detector"), self["detector.shot_noise"]))
        self.resolution_criterion = self._section("resolution", lambda: ResolutionCriterion(
            self["resolution.criterion"], self["resolution.weight_domain"],
            self["resolution.residual_phase_rad"]))
        if self.detector.bandwidth_hz >= 0.5 / self.nrz.time_step:
            raise ConfigError("detector.bandwidth_hz must be below half the sample rate", "detector.bandwidth_hz")

    def seed_for(self, section: str) -> int:
        explicit = self.values.get(f"{section}.seed")
        if explicit is not None:
            return int(explicit)
        return derive_seed(self["run.seed"], section)

    def _make_prbs(self) -> PrbsSpec:
        order = self["prbs.order"]
        seed = self.values["prbs.seed"]
        if seed is None:
            seed = derive_seed(self["run.seed"], "prbs") % ((1 << order) - 1) + 1
        return PrbsSpec(order, seed)

    def _make_circuit(self) -> DacCircuit:
        n = self["circuit.n_bits"]
        mod = ModulatorSpec(self["circuit.extinction_ratio_db"], self["circuit.insertion_loss_db"],
                            self["circuit.phase_on_rad"], self["circuit.phase_off_rad"])
        ps_phase = self["circuit.phase_shifter_phase_rad"]
        ps = PhaseShifterSpec(None if ps_phase == "auto" else float(ps_phase),
                              self["circuit.phase_shifter_drive_power_w"])
        resid = self["circuit.residual_phase_rad"]
        if not isinstance(resid, list):
            resid = [float(resid)] * n
        if len(resid) != n:
            raise ConfigError(f"circuit.residual_phase_rad needs {n} entries", "circuit.residual_phase_rad")
        return DacCircuit(
            n_bits=n,
            coupler=CouplerSpec(self["circuit.split_ratio_r"], self["circuit.coupler_excess_loss_db"]),
            modulators=[mod] * n, phase_shifters=[ps] * n,
            combiner_excess_loss_db=self["circuit.combiner_excess_loss_db"],
            io_coupling_loss_db=self["circuit.io_coupling_loss_db"],
            weight_convention=self["circuit.weight_convention"],
            residual_phase_rad=resid,
            depth_equalization=self["circuit.depth_equalization"])

    def to_dict(self) -> dict:
        return dict(self.values)


def parse_config_text(text: str) -> RunConfig:
    try:
        tree = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        raise ConfigError(f"parse error: {exc}", line=line) from exc
    return RunConfig(_flatten(tree))


def load_config(path) -> RunConfig:
    """Read and validate a config file; an empty file yields all defaults."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {str(path)!r}: {exc.strerror}") from exc
    return parse_config_text(text)


def parse_override(item: str) -> tuple[str, Any]:
    """``key=value`` with a TOML value; bare words are taken as strings."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = (s.strip() for s in item.split("=", 1))
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value
