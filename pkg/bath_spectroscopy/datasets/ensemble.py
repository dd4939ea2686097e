"""Detuning ensembles and their directly computed bath spectrum.

Traces are stored in rad/s on a common grid t_k = k dt, one row per atom.
G(f) follows the convention int_0^inf G df = Var(delta)/2.
"""
import logging
from typing import Dict, Optional, Tuple
from collections import namedtuple

import numpy as np
from scipy import signal

from ..errors import InvalidArgument, PreconditionViolation
from ..models.filters import FrequencyGrid
from ..models.overlap import BathSpectrum, Tabulated, tabulated_spectrum, evaluate_spectrum

logger = logging.getLogger(__name__)

DetuningEnsemble = namedtuple(
    "DetuningEnsemble",
    ["dt", "n_steps", "n_atoms", "traces", "rng_seed", "config", "offset"],
    defaults=(None, 0.0),
)

_SPECTRUM_CHUNK = 64


def make_ensemble(traces, dt: float, rng_seed: Optional[int] = None,
                  config: Optional[Dict] = None, offset: float = 0.0) -> DetuningEnsemble:
    traces = np.asarray(traces, dtype=float)
    if traces.ndim == 1:
        traces = traces[None, :]
    if traces.ndim != 2 or traces.shape[0] < 1 or traces.shape[1] < 1:
        raise InvalidArgument("Traces must have shape (n_atoms, n_steps)")
    if dt <= 0:
        raise InvalidArgument("dt must be positive")
    return DetuningEnsemble(float(dt), traces.shape[1], traces.shape[0], traces, rng_seed,
                            config, float(offset))


def ensemble_times(ens: DetuningEnsemble) -> np.ndarray:
    return ens.dt * np.arange(ens.n_steps)


def ensemble_duration(ens: DetuningEnsemble) -> float:
    return ens.dt * ens.n_steps


def center_ensemble(ens: DetuningEnsemble) -> DetuningEnsemble:
    """Removes the mean over atoms and time once; the removed value is added to offset."""
    mean = float(np.mean(ens.traces))
    return ens._replace(traces=ens.traces - mean, offset=ens.offset + mean)


class periodogram_average():
    """Accumulates per-atom one-sided periodograms and reports their mean and
    standard error across atoms."""

    def __init__(self):
        self.rows = []

    def add_batch(self, periodograms):
        self.rows.append(np.asarray(periodograms))

    def compute(self) -> Tuple[np.ndarray, np.ndarray]:
        rows = np.concatenate(self.rows, axis=0)
        mean = np.mean(rows, axis=0)
        if rows.shape[0] < 2:
            return mean, np.zeros_like(mean)
        return mean, np.std(rows, axis=0, ddof=1) / np.sqrt(rows.shape[0])


def spectrum_from_traces(ens: DetuningEnsemble, grid: FrequencyGrid,
                         segments: int = 8) -> Tabulated:
    """Welch estimate of G(f), averaged over atoms, interpolated onto grid.

    Each trace is cut into Hann-windowed segments of n_steps // segments
    samples with 50% overlap (so at least `segments` of them), without
    detrending. The one-sided density P is halved away from DC and Nyquist to
    match the G convention.

    Raises:
        PreconditionViolation: the lowest positive grid frequency is below 10/duration.
    """
    duration = ensemble_duration(ens)
    positive = grid.values[grid.values > 0]
    if positive.size == 0 or positive[0] * duration < 10 * (1 - 1e-9):
        raise PreconditionViolation("Traces of %.4g s resolve f >= %.4g Hz; grid starts at %s Hz"
                                    % (duration, 10 / duration,
                                       positive[0] if positive.size else "0"))
    nperseg = ens.n_steps // segments
    if nperseg < 4:
        raise PreconditionViolation("Traces too short for %d segments" % segments)

    accumulator = periodogram_average()
    freqs = None
    for start in range(0, ens.n_atoms, _SPECTRUM_CHUNK):
        freqs, density = signal.welch(ens.traces[start:start + _SPECTRUM_CHUNK], fs=1 / ens.dt,
                                      window="hann", nperseg=nperseg, noverlap=nperseg // 2,
                                      detrend=False, scaling="density", axis=-1)
        g = density / 2
        g[..., 0] = density[..., 0]
        if nperseg % 2 == 0:
            g[..., -1] = density[..., -1]
        accumulator.add_batch(g)
    mean, stderr = accumulator.compute()

    values = np.interp(grid.values, freqs, mean)
    uncertainties = np.interp(grid.values, freqs, stderr)
    return tabulated_spectrum(grid, values, uncertainties, origin="simulated")


def correlation_time(G: BathSpectrum, variance: float) -> float:
    """Integral correlation time G(0) / (2 Var); tau_c for exponential correlations."""
    if variance <= 0:
        return 0.0
    return float(evaluate_spectrum(G, 0.0)) / (2 * variance)


def stationarity_check(ens: DetuningEnsemble, n_sigma: float = 3.0) -> Tuple[bool, Dict]:
    """Compares mean and mean square of the two halves of the traces.

    Standard errors are taken across atoms, so they include the correlation
    along time within each trace.
    """
    half = ens.n_steps // 2
    if half < 1:
        raise InvalidArgument("Traces too short to split")
    report = {}
    ok = True
    for name, moment in (("mean", lambda x: x), ("mean_square", lambda x: x**2)):
        first = np.mean(moment(ens.traces[:, :half]), axis=1)
        second = np.mean(moment(ens.traces[:, half:2 * half]), axis=1)
        diff = second - first
        err = np.std(diff, ddof=1) / np.sqrt(ens.n_atoms) if ens.n_atoms > 1 else 0.0
        passed = bool(abs(np.mean(diff)) <= n_sigma * err + 1e-12 * np.mean(np.abs(first)))
        report[name] = (float(np.mean(first)), float(np.mean(second)), float(err), passed)
        ok = ok and passed
    return ok, report


def spectral_peaks(G: Tabulated, n_peaks: int = 3) -> np.ndarray:
    """Frequencies of the largest local maxima of G at f > 0."""
    values = np.asarray(G.values)
    peaks, _ = signal.find_peaks(values)
    peaks = peaks[np.asarray(G.grid.values)[peaks] > 0]
    top = peaks[np.argsort(values[peaks])[::-1][:n_peaks]]
    return np.sort(np.asarray(G.grid.values)[top])


def detuning_summary(ens: DetuningEnsemble, G: Tabulated) -> Dict:
    variance = float(np.var(ens.traces))
    return {
        "variance_rad2_per_s2": variance,
        "std_rad_per_s": float(np.sqrt(variance)),
        "offset_rad_per_s": float(ens.offset),
        "tau_c_s": correlation_time(G, variance),
        "peaks_hz": spectral_peaks(G).tolist(),
    }
