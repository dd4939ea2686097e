"""End-to-end spectrum measurement with continuous drives.

For every Rabi frequency f0 the ensemble is driven for each duration, the
resulting Bloch-vector lengths are read out through randomized-phase scans,
the envelopes are estimated by maximum likelihood and an exponential decay
rate is fitted over the durations. A control run without drive and without
bath gives the rate floor, and the rates are inverted into G(f0).
"""
import logging
from typing import List, Optional, Sequence
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from jax import random

from ..errors import InsufficientData, InvalidArgument, PreconditionViolation
from ..datasets.ensemble import DetuningEnsemble
from ..datasets.synthetic import zero_ensemble
from ..models.bloch import ensemble_coherence
from ..models.coherence import coherence_curve_from, fit_decay_rate
from ..models.configs import config as model_config
from ..models.overlap import invert_spectrum
from ..models.waveforms import constant_drive, pulse_train
from .configs import config as spectroscopy_config
from .envelope import mle_envelope, synthesize_scan

logger = logging.getLogger(__name__)

MeasuredPoint = namedtuple(
    "MeasuredPoint",
    ["rabi_frequency", "durations", "true_coherence", "coherence", "lower", "upper", "fit", "scans"],
)


def _scan_key(seed: int, point: int, duration: int):
    return random.fold_in(random.fold_in(random.PRNGKey(seed), point), duration)


def _read_out(point_index: int, rabi_frequency: Optional[float], durations: np.ndarray,
              true_coherence: np.ndarray, n_samples: int, noise_sigma: float,
              seed: int) -> MeasuredPoint:
    scans, estimates = [], []
    for j, (t, c) in enumerate(zip(durations, true_coherence)):
        scan = synthesize_scan(float(np.clip(c, 0.0, 1.0)), n_samples, noise_sigma,
                               _scan_key(seed, point_index, j), rabi_frequency, float(t))
        scans.append(scan)
        estimates.append(mle_envelope(scan.samples, noise_sigma))
    c_hat = np.array([e.c_hat for e in estimates])
    lower = np.array([e.lower for e in estimates])
    upper = np.array([e.upper for e in estimates])
    curve = coherence_curve_from(durations, c_hat, (upper - lower) / 2)
    try:
        fit = fit_decay_rate(curve)
    except InsufficientData as e:
        if rabi_frequency is None:
            raise
        logger.warning("f0 = %.2f Hz: no decay rate, the envelopes collapsed to 0 (%s)",
                       rabi_frequency, e)
        fit = None
    return MeasuredPoint(rabi_frequency, durations, np.asarray(true_coherence), c_hat, lower,
                         upper, fit, scans)


def measure_point(ens: DetuningEnsemble, rabi_frequency: float, durations: Sequence[float],
                  point_index: int = 0,
                  n_samples: int = spectroscopy_config["samples_per_point"],
                  noise_sigma: float = spectroscopy_config["readout_noise"], seed: int = 0,
                  t1: Optional[float] = None, dressing_kappa: float = 0.0,
                  compensate_dressing: bool = True) -> MeasuredPoint:
    """One f0 of the protocol: drive, scan, estimate, fit. The fit is None when
    fewer than the minimum number of envelopes stay above 0."""
    durations = np.asarray(durations, dtype=float)
    curve = ensemble_coherence(ens, constant_drive(rabi_frequency), durations, t1=t1,
                               dressing_kappa=dressing_kappa,
                               compensate_dressing=compensate_dressing)
    return _read_out(point_index, rabi_frequency, durations, curve.values, n_samples,
                     noise_sigma, seed)


def measure_bias(dt: float, durations: Sequence[float], point_index: int,
                 n_samples: int = spectroscopy_config["samples_per_point"],
                 noise_sigma: float = spectroscopy_config["readout_noise"], seed: int = 0,
                 t1: Optional[float] = None) -> MeasuredPoint:
    """Rate floor from a single atom without bath and without drive."""
    durations = np.asarray(durations, dtype=float)
    n_steps = int(np.ceil(durations.max() / dt - 1e-9))
    idle = pulse_train([], durations.max())
    curve = ensemble_coherence(zero_ensemble(dt, n_steps), idle, durations, t1=t1)
    return _read_out(point_index, None, durations, curve.values, n_samples, noise_sigma, seed)


def measure_spectrum(ens: DetuningEnsemble, rabi_frequencies: Sequence[float],
                     durations: Sequence[float],
                     n_samples: int = spectroscopy_config["samples_per_point"],
                     noise_sigma: float = spectroscopy_config["readout_noise"], seed: int = 0,
                     alpha: Optional[float] = None, t1: Optional[float] = None,
                     bias_run: bool = True, dressing_kappa: float = 0.0,
                     compensate_dressing: bool = True, threads: Optional[int] = None,
                     return_scans: bool = False):
    """Measured G(f0) at each Rabi frequency.

    Args:
        ens:              Bath realizations (simulated trap or synthetic noise).
        rabi_frequencies: Drive frequencies f0 in Hz, distinct.
        durations:        At least three drive durations in seconds.
        bias_run:         Subtract the rate of an undriven, bath-free control run.
    Returns:
        The Tabulated spectrum, or (spectrum, [MeasuredPoint] + [bias point])
        when return_scans is True. A Rabi frequency whose envelopes collapse
        to 0 before enough durations keeps its MeasuredPoint (fit None) but
        is left out of the spectrum.
    Raises:
        PreconditionViolation: f0 t < 10 for some point.
        InsufficientData: no Rabi frequency produced a decay rate.
    """
    rabi_frequencies = np.asarray(rabi_frequencies, dtype=float).reshape(-1)
    durations = np.sort(np.asarray(durations, dtype=float).reshape(-1))
    if np.unique(durations).size < spectroscopy_config["min_durations"]:
        raise InvalidArgument("Need >= %d distinct durations" % spectroscopy_config["min_durations"])
    if rabi_frequencies.size == 0:
        raise InvalidArgument("Need at least one Rabi frequency")
    cycles = rabi_frequencies.min() * durations.min()
    if cycles < model_config["min_drive_cycles"]:
        raise PreconditionViolation("f0 t = %.3g at the shortest duration and lowest f0; need >= %d"
                                    % (cycles, model_config["min_drive_cycles"]))

    def run(indexed):
        index, f0 = indexed
        point = measure_point(ens, f0, durations, index, n_samples, noise_sigma, seed, t1,
                              dressing_kappa, compensate_dressing)
        if point.fit is None:
            return point
        logger.info("f0 = %8.2f Hz: R = %.4g +- %.2g 1/s (chi2/dof %.2f)", f0, point.fit.rate,
                    point.fit.rate_error, point.fit.chi2_dof)
        return point

    with ThreadPoolExecutor(max_workers=threads) as executor:
        points: List[MeasuredPoint] = list(executor.map(run, enumerate(rabi_frequencies)))

    bias = 0.0
    if bias_run:
        bias_point = measure_bias(ens.dt, durations, rabi_frequencies.size, n_samples,
                                  noise_sigma, seed, t1)
        bias = bias_point.fit.rate
        points.append(bias_point)
        logger.info("Bias rate %.4g +- %.2g 1/s", bias, bias_point.fit.rate_error)

    driven = [p for p in points if p.rabi_frequency is not None]
    rates = [(p.rabi_frequency, p.fit.rate, p.fit.rate_error) for p in driven if p.fit is not None]
    lost = [p.rabi_frequency for p in driven if p.fit is None]
    if lost:
        logger.warning("Left out of the spectrum for lack of a decay rate: %s Hz", lost)
    if not rates:
        raise InsufficientData("No Rabi frequency gave a decay rate; shorten the durations")
    spectrum = invert_spectrum(rates, bias, alpha)
    return (spectrum, points) if return_scans else spectrum
