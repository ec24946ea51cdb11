"""Command line entry point: ``pbwdac <subcommand> [-c config.toml] [options]``.

Subcommands write their artifacts to ``<output_dir>/<subcommand>_<label>.{csv,json}``.
Exit codes: 0 success, 2 configuration error, 3 numerical guard violation.
Errors go to stderr as a single JSON line.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .circuit import NumericalGuardError, transfer_curve
from .config import ConfigError, RunConfig, load_config, parse_override
from .design import (REFERENCE_LINEARITY, REFERENCE_SPEED_POWER, insertion_loss_budget,
                     laser_power_requirement, power_budget, resolution_limit)
from .metrics import AnalysisDomain, dynamic_report, sine_test, static_report
from .waveform import eye_accumulate, run_waveform

log = logging.getLogger("pbwdac")

SUBCOMMANDS = ("transfer", "eye", "metrics", "budget", "resolution", "sweep")

EXIT_OK, EXIT_CONFIG, EXIT_GUARD = 0, 2, 3

# top-level keys every JSON report of a kind must carry
REPORT_KEYS = {
    "eye": {"n_samples", "time_step_s", "amp_range", "total_count", "time_bins", "amp_bins", "seeds", "circuit"},
    "metrics": {"primary_domain", "static", "dynamic", "sine", "circuit"},
    "budget": {"modulator_power_w", "phase_shifter_power_w", "driver_power_w", "laser_electrical_power_w",
               "total_w", "sample_rate_hz", "efficiency_gs_per_j", "energy_per_sample_j", "insertion_loss"},
    "resolution": {"extinction_ratio_db", "criterion", "weight_domain", "description", "max_n",
                   "resolution_bits"},
}


def fmt(x) -> str:
    """17 significant digits, '.' separator, locale independent."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def validate_report(kind: str, data: dict) -> None:
    missing = REPORT_KEYS[kind] - set(data)
    if missing:
        raise ValueError(f"{kind} report missing keys: {sorted(missing)}")


def write_json(path: Path, kind: str, data: dict) -> Path:
    data = _jsonable(data)
    validate_report(kind, data)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    return path


def write_csv(path: Path, header: list[str], rows) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if v is not None else "" for v in row])
    return path


def _transfer(cfg: RunConfig, stem: Path, jobs: int) -> list[Path]:
    curve = transfer_curve(cfg.circuit, cfg.input_field)
    rows = zip(curve.codes, curve.powers, curve.fields.real, curve.fields.imag)
    return [write_csv(stem.with_suffix(".csv"), ["code", "power_w", "field_re", "field_im"], rows)]


def _eye(cfg: RunConfig, stem: Path, jobs: int) -> list[Path]:
    run = run_waveform(cfg.circuit, cfg.input_field, cfg.prbs, cfg.nrz, cfg.jitter, cfg.detector,
                       cfg["eye.n_symbols"], jobs=jobs)
    log.info("eye: %d samples simulated", run.photocurrent.size)
    eye = eye_accumulate(run.photocurrent, cfg.nrz, cfg["eye.time_bins"], cfg["eye.amp_bins"])
    lo, hi = eye.amp_range
    amp_edges = np.linspace(lo, hi, eye.amp_bins + 1)
    amp_centers = 0.5 * (amp_edges[:-1] + amp_edges[1:])
    two_ui = 2.0 * cfg.nrz.bit_period
    t_centers = (np.arange(eye.time_bins) + 0.5) * two_ui / eye.time_bins
    grid = stem.with_suffix(".csv")
    write_csv(grid, ["amplitude_a"] + [f"t_{fmt(t)}" for t in t_centers],
              ([a] + eye.histogram[:, j].tolist() for j, a in enumerate(amp_centers)))
    ts = stem.with_name(stem.name + "_timeseries.csv")
    n = run.optical_power.size
    t = np.arange(n) * run.time_step_s
    lane_cols = [f"drive_bit{i + 1}" for i in range(cfg.circuit.n_bits)]
    write_csv(ts, ["time_s"] + lane_cols + ["optical_power_w", "photocurrent_a"],
              zip(t, *run.drive, run.optical_power, run.photocurrent))
    summary = {
        "n_samples": n, "time_step_s": run.time_step_s, "amp_range": list(eye.amp_range),
        "total_count": eye.total, "time_bins": eye.time_bins, "amp_bins": eye.amp_bins,
        "seeds": run.seeds, "circuit": cfg.circuit.metadata(),
        "photocurrent_mean_a": float(run.photocurrent.mean()),
        "photocurrent_std_a": float(run.photocurrent.std()),
        "thermal_sigma_a": cfg.detector.thermal_sigma_a,
    }
    return [grid, ts, write_json(stem.with_suffix(".json"), "eye", summary)]


def _metrics(cfg: RunConfig, stem: Path, jobs: int) -> list[Path]:
    curve = transfer_curve(cfg.circuit, cfg.input_field)
    primary = AnalysisDomain(cfg["metrics.analysis_domain"])
    lsb_def = cfg["metrics.lsb_definition"]
    full = (1 << cfg.circuit.n_bits) - 1
    amp = full / 2.0 if cfg["metrics.amplitude_codes"] == "full" else float(cfg["metrics.amplitude_codes"])
    J, M = cfg["metrics.sine_periods"], cfg["metrics.record_length"]
    samples = sine_test(cfg.circuit, amp, J, M, cfg.input_field, quantize=cfg["metrics.quantize"])
    static, dynamic = {}, {}
    for dom in AnalysisDomain:
        static[dom.value] = static_report(curve, lsb_def, dom)
        dynamic[dom.value] = dynamic_report(samples, J, cfg["metrics.n_harmonics"], True, dom)
    report = {
        "primary_domain": primary.value,
        "static": {k: v.to_dict() for k, v in static.items()},
        "dynamic": {k: v.to_dict() for k, v in dynamic.items()},
        "sine": {"amplitude_codes": amp, "periods": J, "record_length": M,
                 "quantize": cfg["metrics.quantize"]},
        "circuit": cfg.circuit.metadata(),
    }
    out = [write_json(stem.with_suffix(".json"), "metrics", report)]
    st = static[primary.value]
    dnl = list(st.dnl) + [None]
    out.append(write_csv(stem.with_name(stem.name + "_codes.csv"),
                         ["code", "power_w", "dnl_lsb", "inl_lsb"],
                         zip(curve.codes, curve.powers, dnl, st.inl)))
    spec = dynamic[primary.value].spectrum
    out.append(write_csv(stem.with_name(stem.name + "_spectrum.csv"), ["bin", "power"],
                         zip(range(spec.size), spec)))
    return out


def _budget(cfg: RunConfig, stem: Path, jobs: int) -> list[Path]:
    laser_req = laser_power_requirement(cfg["detector.min_detectable_power_w"], cfg["budget.snr_margin"],
                                        cfg["budget.circuit_loss_db"], cfg["budget.wall_plug_efficiency"])
    laser = laser_req if cfg["budget.laser_electrical_w"] == "auto" else float(cfg["budget.laser_electrical_w"])
    pb = power_budget(cfg["budget.n_bits"], cfg["budget.per_modulator_w"], cfg["budget.n_phase_shifters"],
                      cfg["budget.per_shifter_w"], cfg["budget.n_driver_arrays"], cfg["budget.per_driver_w"],
                      laser, cfg["budget.sample_rate_hz"])
    loss = insertion_loss_budget(cfg.circuit, cfg["budget.extra_losses_db"])
    report = pb.to_dict()
    report.update({
        "laser_requirement_w": laser_req,
        "insertion_loss": loss.to_dict(),
        "reference_speed_power": REFERENCE_SPEED_POWER,
        "reference_linearity": REFERENCE_LINEARITY,
    })
    return [write_json(stem.with_suffix(".json"), "budget", report)]


def _resolution(cfg: RunConfig, stem: Path, jobs: int) -> list[Path]:
    er = cfg["resolution.extinction_ratio_db"]
    er = cfg["circuit.extinction_ratio_db"] if er == "circuit" else float(er)
    crit = cfg.resolution_criterion
    max_n = cfg["resolution.max_n"]
    n = resolution_limit(er, crit, max_n, cfg["circuit.split_ratio_r"])
    report = {
        "extinction_ratio_db": er, "criterion": crit.kind.value, "weight_domain": crit.weight_domain.value,
        "residual_phase_rad": crit.residual_phase_rad, "description": crit.describe(),
        "max_n": max_n, "resolution_bits": n, "reached_guard": n == max_n,
        "reported_claim_bits": 14, "reported_claim_reproduced": n == 14,
    }
    return [write_json(stem.with_suffix(".json"), "resolution", report)]


def _sweep_point(cfg: RunConfig, key: str, value):
    point = cfg.with_overrides({key: value})
    curve = transfer_curve(point.circuit, point.input_field)
    p_min, p_max = float(curve.powers[0]), float(curve.powers[-1])
    ratio = p_max / p_min if p_min > 0 else math.inf
    st = static_report(curve, point["metrics.lsb_definition"], point["metrics.analysis_domain"])
    return [value, p_min, p_max, ratio, st.dnl_min, st.dnl_max, st.inl_max_abs]


def _sweep(cfg: RunConfig, stem: Path, jobs: int) -> list[Path]:
    key = cfg["sweep.parameter"]
    if key not in cfg.values or key.startswith(("sweep.", "run.")):
        raise ConfigError(f"sweep.parameter {key!r} is not a sweepable key", "sweep.parameter")
    values = cfg["sweep.values"]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda v: _sweep_point(cfg, key, v), values))
    else:
        rows = [_sweep_point(cfg, key, v) for v in values]
    header = [key, "p_code0_w", "p_full_w", "endpoint_ratio", "dnl_min_lsb", "dnl_max_lsb", "inl_max_abs_lsb"]
    return [write_csv(stem.with_suffix(".csv"), header, rows)]


_HANDLERS = {"transfer": _transfer, "eye": _eye, "metrics": _metrics, "budget": _budget,
             "resolution": _resolution, "sweep": _sweep}


def run_subcommand(name: str, cfg: RunConfig, label: str | None = None, out_dir=None,
                   jobs: int | None = None) -> list[Path]:
    """Run one subcommand and return the written artifact paths."""
    if name not in _HANDLERS:
        raise ValueError(f"unknown subcommand {name!r}")
    label = label or cfg["run.label"] or time.strftime("%Y%m%d-%H%M%S")
    out = Path(out_dir if out_dir is not None else cfg["run.output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    jobs = jobs or cfg["run.jobs"]
    log.info("%s: writing to %s (label %s, jobs %d)", name, out, label, jobs)
    return _HANDLERS[name](cfg, out / f"{name}_{label}", jobs)


def _error_line(kind: str, exc: Exception, extra: dict | None = None) -> str:
    d = {"error": kind, "message": str(exc)}
    d.update(extra or {})
    return json.dumps(d, sort_keys=True)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pbwdac", description="Coherent photonic binary-weighted DAC simulator")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("-c", "--config", help="TOML config file of dotted keys (default: all defaults)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key, e.g. --set circuit.n_bits=8")
    p.add_argument("--label", help="output file label (default: run.label or a timestamp)")
    p.add_argument("-o", "--out", help="output directory (default: run.output_dir)")
    p.add_argument("-j", "--jobs", type=int, help="worker threads (default: run.jobs)")
    p.add_argument("-v", "--verbose", action="store_true", help="log one line per stage")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config) if args.config else RunConfig({})
        if args.overrides:
            cfg = cfg.with_overrides(dict(parse_override(o) for o in args.overrides))
        if args.jobs is not None and args.jobs < 1:
            raise ConfigError("--jobs must be >= 1", "run.jobs")
        paths = run_subcommand(args.subcommand, cfg, args.label, args.out, args.jobs)
    except ConfigError as exc:
        print(json.dumps(exc.to_dict(), sort_keys=True), file=sys.stderr)
        return EXIT_CONFIG
    except NumericalGuardError as exc:
        print(_error_line("numerical_guard", exc), file=sys.stderr)
        return EXIT_GUARD
    except ValueError as exc:
        print(_error_line("value", exc), file=sys.stderr)
        return EXIT_CONFIG
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
