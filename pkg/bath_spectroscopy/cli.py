"""Command-line entry point.

    python -m bath_spectroscopy.cli <command> --config cfg.json [--seed N] [--threads N]
                                    [--out-dir DIR] [--format csv|json] [--log-level LEVEL]

Commands: simulate-bath, filter, predict, measure-spectrum, verify. Every run
writes its outputs and a manifest.json into --out-dir. Exit codes: 0 success,
2 configuration or argument error, 3 numeric failure, 4 failed verification.
"""
import os
import sys
import time
import logging
import argparse
import warnings
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import (ConfigError, InvalidArgument, PreconditionViolation, NumericFailure,
                     BathSpectroscopyError)
from .datasets.ensemble import (DetuningEnsemble, spectrum_from_traces, detuning_summary,
                                correlation_time, ensemble_duration)
from .datasets.synthetic import (ou_ensemble, redraw_ensemble, static_ensemble, zero_ensemble,
                                 ou_spectrum, redraw_spectrum)
from .datasets.trap import (trap_config, CrossedGaussian, collision_config, collision_rate,
                            simulate_trajectories, default_dt)
from .models.bloch import ensemble_coherence
from .models.coherence import coherence_curve_from, fit_decay_rate
from .models.filters import log_grid, uniform_grid, filter_for_waveform
from .models.overlap import (lorentzian_spectrum, zero_spectrum, continuous_drive_rate,
                             predicted_rates, sequence_coherence_times,
                             evaluate_spectrum)
from .models.sequences import sequence_from_dict, sequence_waveform, with_total_time
from .models.waveforms import constant_drive
from .spectroscopy.protocol import measure_spectrum
from .utils.io import (load_config, write_table, write_traces, write_manifest, read_spectrum,
                       spectrum_frame, filter_frame, coherence_frame, scans_frame)
from .utils.misc import get_logger, prepare_out_dir

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 2, 3, 4


class AcceptanceFailure(BathSpectroscopyError):
    """Raised by verify after its outputs are written; carries them for the manifest."""
    def __init__(self, message: str, outputs: List[str]):
        super().__init__(message)
        self.outputs = outputs


def _field(config, path: str, kind=float, default=None, required: bool = False):
    """Value at a dotted path, converted to kind; ConfigError names the path."""
    node = config
    for part in path.split("."):
        if not hasattr(node, "get") or part not in node:
            if required:
                raise ConfigError("Missing required field", field=path)
            return default
        node = node[part]
    if node is None:
        return default
    try:
        if kind is bool:
            if not isinstance(node, bool):
                raise TypeError
            return node
        if kind in (list, tuple):
            if not isinstance(node, (list, tuple)):
                raise TypeError
            return [float(x) for x in node]
        if kind is int and (isinstance(node, bool) or float(node) != int(node)):
            raise TypeError
        return kind(node)
    except (TypeError, ValueError):
        raise ConfigError("Expected %s, got %r" % (kind.__name__, node), field=path)


def _check_keys(config, path: str, allowed):
    node = config
    for part in filter(None, path.split(".")):
        node = node.get(part, {})
    if not hasattr(node, "keys"):
        raise ConfigError("Expected an object", field=path)
    unknown = sorted(set(node.keys()) - set(allowed))
    if unknown:
        raise ConfigError("Unknown key(s) " + ", ".join(unknown), field=path or "<root>")


_BATH_KEYS = ("kind", "trap", "collisions", "n_atoms", "duration_s", "dt_s", "sigma_rad_per_s",
              "tau_c_s", "rate_per_s", "signs")
_TRAP_KEYS = ("radial_frequency_hz", "axial_frequency_hz", "temperature_k", "potential_shape",
              "beams", "gravity", "atom_mass_kg", "differential_shift_ratio")


def build_bath(config, seed: int, threads: Optional[int]) -> Tuple[DetuningEnsemble, Optional[object]]:
    """The bath ensemble and, for synthetic sources, its exact spectrum."""
    _check_keys(config, "bath", _BATH_KEYS)
    kind = _field(config, "bath.kind", str, "trap")
    n_atoms = _field(config, "bath.n_atoms", int, required=True)
    duration = _field(config, "bath.duration_s", float, required=True)

    if kind == "trap":
        _check_keys(config, "bath.trap", _TRAP_KEYS)
        _check_keys(config, "bath.collisions", ("rate_per_s", "atom_number", "cross_section_m2"))
        shape = _field(config, "bath.trap.potential_shape", str, "Harmonic3D")
        beams = None
        if shape == "CrossedGaussian":
            beams = CrossedGaussian(_field(config, "bath.trap.beams.waist_m", required=True),
                                    _field(config, "bath.trap.beams.power_w", required=True),
                                    _field(config, "bath.trap.beams.wavelength_m", float, 1064e-9),
                                    _field(config, "bath.trap.beams.crossing_angle_rad", float,
                                           np.pi / 2))
        extra = {}
        if _field(config, "bath.trap.atom_mass_kg") is not None:
            extra["atom_mass"] = _field(config, "bath.trap.atom_mass_kg")
        if _field(config, "bath.trap.differential_shift_ratio") is not None:
            extra["differential_shift_ratio"] = _field(config, "bath.trap.differential_shift_ratio")
        trap = trap_config(_field(config, "bath.trap.radial_frequency_hz"),
                           _field(config, "bath.trap.axial_frequency_hz"),
                           _field(config, "bath.trap.temperature_k", required=True),
                           potential_shape=shape, beams=beams,
                           gravity=_field(config, "bath.trap.gravity", bool, False), **extra)
        rate = _field(config, "bath.collisions.rate_per_s")
        atom_number = _field(config, "bath.collisions.atom_number")
        if rate is None:
            if atom_number is None:
                raise ConfigError("Need rate_per_s or atom_number", field="bath.collisions")
            kwargs = {}
            if _field(config, "bath.collisions.cross_section_m2") is not None:
                kwargs["cross_section"] = _field(config, "bath.collisions.cross_section_m2")
            rate = collision_rate(atom_number, trap, **kwargs)
            logger.info("Collision rate from N = %.3g atoms: %.4g 1/s", atom_number, rate)
        dt = _field(config, "bath.dt_s", float, default_dt(trap))
        ens = simulate_trajectories(trap, collision_config(rate, atom_number=atom_number),
                                    n_atoms, duration, dt, seed, threads)
        return ens, None

    dt = _field(config, "bath.dt_s", float, required=True)
    n_steps = int(round(duration / dt))
    if kind == "exponential":
        sigma = _field(config, "bath.sigma_rad_per_s", required=True)
        tau_c = _field(config, "bath.tau_c_s", required=True)
        return (ou_ensemble(sigma, tau_c, dt, n_steps, n_atoms, seed, threads),
                ou_spectrum(sigma, tau_c) if sigma > 0 else zero_spectrum())
    if kind == "redraw":
        sigma = _field(config, "bath.sigma_rad_per_s", required=True)
        rate = _field(config, "bath.rate_per_s", required=True)
        return (redraw_ensemble(sigma, rate, dt, n_steps, n_atoms, seed,
                                _field(config, "bath.signs", bool, False), threads),
                redraw_spectrum(sigma, rate) if sigma > 0 and rate > 0 else None)
    if kind == "static":
        return static_ensemble(_field(config, "bath.sigma_rad_per_s", required=True), dt,
                               n_steps, n_atoms, seed), None
    if kind == "zero":
        return zero_ensemble(dt, n_steps, n_atoms), zero_spectrum()
    raise ConfigError("Unknown bath kind " + repr(kind), field="bath.kind")


def _spectrum_grid(config, ens: DetuningEnsemble):
    duration = ensemble_duration(ens)
    f_min = _field(config, "spectrum.f_min_hz", float, 10.0 / duration)
    f_max = _field(config, "spectrum.f_max_hz", float, 0.25 / ens.dt)
    return log_grid(f_min, f_max, _field(config, "spectrum.n_points", int, 400))


def cmd_simulate_bath(config, args) -> List[str]:
    _check_keys(config, "", ("bath", "spectrum", "seed"))
    _check_keys(config, "spectrum", ("f_min_hz", "f_max_hz", "n_points"))
    ens, _ = build_bath(config, args.seed, args.threads)
    G = spectrum_from_traces(ens, _spectrum_grid(config, ens))
    summary = detuning_summary(ens, G)
    logger.info("std(delta) = %.4g rad/s, tau_c ~ %.4g s, peaks at %s Hz",
                summary["std_rad_per_s"], summary["tau_c_s"],
                ", ".join("%.1f" % p for p in summary["peaks_hz"]))
    outputs = write_traces(ens, os.path.join(args.out_dir, "traces"))
    outputs.append(write_table(spectrum_frame(G), os.path.join(args.out_dir, "spectrum"), args.format))
    row = dict(summary, peaks_hz=" ".join("%.6g" % p for p in summary["peaks_hz"]))
    outputs.append(write_table(pd.DataFrame([row]), os.path.join(args.out_dir, "summary"),
                               args.format))
    return outputs


def _frequency_grid(config, t: float, default_f_max: float):
    _check_keys(config, "grid", ("spacing", "f_min_hz", "f_max_hz", "step_hz", "n_points"))
    spacing = _field(config, "grid.spacing", str, "uniform")
    f_max = _field(config, "grid.f_max_hz", float, default_f_max)
    if spacing == "uniform":
        return uniform_grid(f_max, _field(config, "grid.step_hz", float, 0.1 / t),
                            _field(config, "grid.f_min_hz", float, 0.0))
    if spacing == "log":
        return log_grid(_field(config, "grid.f_min_hz", float, 0.1 / t), f_max,
                        _field(config, "grid.n_points", int, 400))
    raise ConfigError("Unknown grid spacing " + repr(spacing), field="grid.spacing")


def _sequence(config, path: str = "sequence"):
    node = config.get(path)
    if node is None:
        raise ConfigError("Missing required field", field=path)
    try:
        return sequence_from_dict(node)
    except InvalidArgument as e:
        raise ConfigError(str(e), field=path)


def cmd_filter(config, args) -> List[str]:
    _check_keys(config, "", ("sequence", "drive", "grid", "pulse_duration_s", "seed"))
    if "drive" in config:
        t = _field(config, "drive.total_time_s", required=True)
        f0 = _field(config, "drive.rabi_frequency_hz", required=True)
        waveform = constant_drive(f0, t)
        default_f_max = 2 * f0 + 100 / t
    else:
        spec = _sequence(config)
        t = spec.total_time
        waveform = sequence_waveform(spec, _field(config, "pulse_duration_s", float, 0.0))
        default_f_max = 20.0 * (spec.n_pulses + 1) / t
    F = filter_for_waveform(waveform, t, _frequency_grid(config, t, default_f_max))
    return [write_table(filter_frame(F), os.path.join(args.out_dir, "filter"), args.format)]


def _spectrum_from_config(config, base_dir: str):
    _check_keys(config, "spectrum", ("file", "lorentzian", "zero"))
    if _field(config, "spectrum.file", str) is not None:
        path = _field(config, "spectrum.file", str)
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return read_spectrum(path)
    if "lorentzian" in config.get("spectrum", {}):
        return lorentzian_spectrum(_field(config, "spectrum.lorentzian.g0", required=True),
                                   _field(config, "spectrum.lorentzian.corner_hz", required=True))
    if _field(config, "spectrum.zero", bool, False):
        return zero_spectrum()
    raise ConfigError("Need spectrum.file, spectrum.lorentzian or spectrum.zero", field="spectrum")


def cmd_predict(config, args) -> List[str]:
    _check_keys(config, "", ("spectrum", "sequence", "times_s", "pulse_counts", "alpha", "t1_s",
                             "seed"))
    G = _spectrum_from_config(config, args.config_dir)
    spec = _sequence(config)
    times = np.asarray(_field(config, "times_s", list, required=True))
    alpha = _field(config, "alpha", float)
    t1 = _field(config, "t1_s", float)

    family = lambda t: sequence_waveform(with_total_time(spec, t))
    rates = predicted_rates(G, family, times, alpha, t1, args.threads)
    curve = coherence_curve_from(times, np.exp(-rates * times))
    outputs = [write_table(coherence_frame(curve, rates),
                           os.path.join(args.out_dir, "coherence"), args.format)]

    counts = _field(config, "pulse_counts", list)
    if counts:
        table = sequence_coherence_times(G, spec.kind, [int(n) for n in counts], spec.total_time,
                                         alpha, t1, spec.phase_pattern)
        frame = pd.DataFrame(table, columns=["n_pulses", "coherence_time_s"])
        frame.insert(0, "kind", spec.kind)
        for n, t2 in table:
            logger.info("%s-%d: coherence time %.4g s", spec.kind, n, t2)
        outputs.append(write_table(frame, os.path.join(args.out_dir, "coherence_times"),
                                   args.format))
    return outputs


_MEASURE_KEYS = ("bath", "rabi_frequencies_hz", "durations_s", "samples_per_point",
                 "readout_noise", "t1_s", "bias_run", "dressing", "alpha", "write_scans", "seed")


def cmd_measure_spectrum(config, args) -> List[str]:
    _check_keys(config, "", _MEASURE_KEYS)
    _check_keys(config, "dressing", ("kappa_per_hz", "compensate"))
    ens, _ = build_bath(config, args.seed, args.threads)
    spectrum, points = measure_spectrum(
        ens, _field(config, "rabi_frequencies_hz", list, required=True),
        _field(config, "durations_s", list, required=True),
        n_samples=_field(config, "samples_per_point", int, 30),
        noise_sigma=_field(config, "readout_noise", float, 0.05),
        seed=args.seed, alpha=_field(config, "alpha", float), t1=_field(config, "t1_s", float),
        bias_run=_field(config, "bias_run", bool, True),
        dressing_kappa=_field(config, "dressing.kappa_per_hz", float, 0.0),
        compensate_dressing=_field(config, "dressing.compensate", bool, True),
        threads=args.threads, return_scans=True)
    outputs = [write_table(spectrum_frame(spectrum), os.path.join(args.out_dir, "spectrum"),
                           args.format)]
    if _field(config, "write_scans", bool, True):
        outputs.append(write_table(scans_frame(points), os.path.join(args.out_dir, "scans"),
                                   args.format))
    return outputs


_VERIFY_KEYS = ("bath", "rabi_frequencies_hz", "durations_s", "tolerance", "min_coherence",
                "spectrum", "seed")


def cmd_verify(config, args) -> List[str]:
    """Bloch Monte-Carlo coherence against the overlap prediction under constant drives.

    A point is an expected divergence when R tau_c > 1 (outside weak coupling);
    only the other points decide PASS/FAIL.
    """
    _check_keys(config, "", _VERIFY_KEYS)
    _check_keys(config, "spectrum", ("f_min_hz", "f_max_hz", "n_points"))
    ens, exact = build_bath(config, args.seed, args.threads)
    G = exact if exact is not None else spectrum_from_traces(ens, _spectrum_grid(config, ens))
    variance = float(np.var(ens.traces))
    tau_c = correlation_time(G, variance)
    tolerance = _field(config, "tolerance", float, 0.1)
    min_coherence = _field(config, "min_coherence", float, 0.2)
    durations = np.sort(np.asarray(_field(config, "durations_s", list, required=True)))

    rows = []
    for f0 in _field(config, "rabi_frequencies_hz", list, required=True):
        curve = ensemble_coherence(ens, constant_drive(f0), durations, threads=args.threads)
        predicted_rate = np.array([continuous_drive_rate(G, f0, t) for t in durations])
        predicted = np.exp(-predicted_rate * durations)
        usable = predicted >= min_coherence
        deviation = (float(np.max(np.abs(curve.values[usable] - predicted[usable]) / predicted[usable]))
                     if np.any(usable) else 0.0)
        expected_divergence = bool(np.max(predicted_rate) * tau_c > 1)
        passed = deviation <= tolerance
        try:
            mc_rate = fit_decay_rate(curve).rate
        except BathSpectroscopyError:
            mc_rate = np.nan
        status = "PASS" if passed else ("EXPECTED-DIVERGENCE" if expected_divergence else "FAIL")
        rows.append({"f0_hz": f0, "G_rad2_per_s": float(evaluate_spectrum(G, f0)),
                     "predicted_rate_per_s": float(np.mean(predicted_rate)),
                     "bloch_rate_per_s": mc_rate, "max_relative_deviation": deviation,
                     "R_tau_c": float(np.max(predicted_rate) * tau_c), "status": status})
        logger.info("f0 = %8.2f Hz: deviation %.3f, R tau_c = %.3g -> %s", f0, deviation,
                    rows[-1]["R_tau_c"], status)

    outputs = [write_table(pd.DataFrame(rows), os.path.join(args.out_dir, "verify"), args.format)]
    failures = [r for r in rows if r["status"] == "FAIL"]
    logger.info("verify: %s (%d of %d points failed)", "FAIL" if failures else "PASS",
                len(failures), len(rows))
    if failures:
        raise AcceptanceFailure("%d of %d points outside tolerance" % (len(failures), len(rows)),
                                outputs)
    return outputs


COMMANDS = {
    "simulate-bath": cmd_simulate_bath,
    "filter": cmd_filter,
    "predict": cmd_predict,
    "measure-spectrum": cmd_measure_spectrum,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Dynamical-decoupling bath spectroscopy: simulate "
                                                 "baths, compute filters, predict and measure "
                                                 "coherence.")
    parser.add_argument("command", choices=sorted(COMMANDS), help="Experiment to run.")
    parser.add_argument("--config", type=str, required=True, help="JSON config file.")
    parser.add_argument("--seed", type=int, default=None,
                        help="Random seed; overrides the config's seed (default 0).")
    parser.add_argument("--threads", type=int, default=os.cpu_count(),
                        help="Worker threads. Results do not depend on this.")
    parser.add_argument("--out-dir", type=str, default="out", help="Output directory.")
    parser.add_argument("--format", type=str, choices=("csv", "json"), default="csv",
                        help="Table format of the outputs.")
    parser.add_argument("--log-level", type=str, default="INFO",
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    get_logger(getattr(logging, args.log_level))
    start = time.time()
    try:
        config = load_config(args.config)
        args.config_dir = os.path.dirname(os.path.abspath(args.config))
        if args.seed is None:
            args.seed = _field(config, "seed", int, 0)
        prepare_out_dir(args.out_dir)
        outputs = COMMANDS[args.command](config, args)
        write_manifest(args.out_dir, args.command, config, args.seed, outputs, time.time() - start)
    except AcceptanceFailure as e:
        write_manifest(args.out_dir, args.command, config, args.seed, e.outputs,
                       time.time() - start)
        logger.error("verify failed: %s", e)
        return EXIT_ACCEPTANCE
    except ConfigError as e:
        logger.error("Config error: %s", e)
        return EXIT_CONFIG
    except (InvalidArgument, PreconditionViolation) as e:
        logger.error("Invalid input: %s", e)
        return EXIT_CONFIG
    except NumericFailure as e:
        logger.error("Numeric failure: %s", e)
        return EXIT_NUMERIC
    except BathSpectroscopyError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    warnings.filterwarnings("ignore")
    sys.exit(main())
