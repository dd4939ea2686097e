"""Overlap-integral decay rates, coherence predictions and spectrum inversion.

R = (2 alpha / t) int_0^inf G(f) F_t(f) df, C = exp(-R t), fidelity = (1 + C)/2.
The calibrated alpha (models.configs) makes R t the exact Gaussian-phase
exponent, and a resonant drive at f0 gives R -> G(f0)/4.
"""
import math
import logging
from typing import Callable, Optional, Sequence, Tuple, Union
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import jax.numpy as jnp
from scipy.optimize import curve_fit

from ..errors import (InvalidArgument, PreconditionViolation, InconsistentMeasurement)
from .configs import config as model_config
from .coherence import CoherenceCurve, coherence_curve_from
from .filters import (FrequencyGrid, FilterFunction, frequency_grid, uniform_grid,
                      filter_constant_drive, filter_numeric, filter_for_waveform, filter_area)
from .sequences import sequence_spec, sequence_waveform, admissible_cdd_counts
from .waveforms import (ControlWaveform, PulseTrain, ConstantDrive, SidebandDrive,
                        sideband_drive, max_rabi_frequency)
from .utils import trapezoid

logger = logging.getLogger(__name__)

Lorentzian = namedtuple("Lorentzian", ["g0", "corner", "origin"], defaults=("analytic",))

Tabulated = namedtuple("Tabulated", ["grid", "values", "uncertainties", "origin", "clamped"],
                       defaults=(None, "measured", None))

BathSpectrum = Union[Lorentzian, Tabulated]

DecayPrediction = namedtuple(
    "DecayPrediction",
    ["rate", "observation_time", "coherence", "fidelity", "frequencies", "integrand"],
)


def lorentzian_spectrum(g0: float, corner: float, origin: str = "analytic") -> Lorentzian:
    """G(f) = g0 / (1 + (f/f_c)^2). An exponentially correlated detuning with
    variance sigma^2 and rate Gamma has g0 = 2 sigma^2/Gamma, f_c = Gamma/2pi."""
    if g0 <= 0 or corner <= 0:
        raise InvalidArgument("Lorentzian needs g0 > 0 and corner > 0")
    return Lorentzian(float(g0), float(corner), origin)


def tabulated_spectrum(grid: Union[FrequencyGrid, Sequence[float]],
                       values: Sequence[float],
                       uncertainties: Optional[Sequence[float]] = None,
                       origin: str = "measured",
                       clamped: Optional[Sequence[bool]] = None) -> Tabulated:
    if not isinstance(grid, FrequencyGrid):
        grid = frequency_grid(grid)
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.shape != grid.values.shape:
        raise InvalidArgument("Need one spectrum value per grid frequency")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise InvalidArgument("Spectrum values must be finite and non-negative")
    if uncertainties is not None:
        uncertainties = np.asarray(uncertainties, dtype=float).reshape(-1)
        if uncertainties.shape != values.shape:
            raise InvalidArgument("Need one uncertainty per grid frequency")
    if clamped is not None:
        clamped = np.asarray(clamped, dtype=bool).reshape(-1)
    return Tabulated(grid, values, uncertainties, origin, clamped)


def zero_spectrum() -> Tabulated:
    return tabulated_spectrum([0.0, 1.0], [0.0, 0.0], origin="analytic")


def evaluate_spectrum(G: BathSpectrum, f):
    """G at frequencies f (Hz). Tabulated spectra are linear between grid
    points and clamped to the end values outside."""
    f = jnp.asarray(f, dtype=float)
    if isinstance(G, Lorentzian):
        return G.g0 / (1 + (f / G.corner)**2)
    if isinstance(G, Tabulated):
        return jnp.interp(f, jnp.asarray(G.grid.values), jnp.asarray(G.values))
    raise InvalidArgument("Unknown spectrum type: " + type(G).__name__)


def _check_alpha(alpha: Optional[float]) -> float:
    alpha = model_config["alpha"] if alpha is None else alpha
    if not 0 < alpha <= 1:
        raise InvalidArgument("alpha must lie in (0, 1], got " + str(alpha))
    return float(alpha)


def _union_frequencies(G: BathSpectrum, F: FilterFunction):
    f = np.asarray(F.grid.values, dtype=float)
    values = np.asarray(F.values, dtype=float)
    if not isinstance(G, Tabulated):
        return f, values
    g = np.asarray(G.grid.values, dtype=float)
    if g[-1] < f[0] or g[0] > f[-1]:
        raise InvalidArgument("Spectrum grid [%g, %g] Hz and filter grid [%g, %g] Hz do not overlap"
                              % (g[0], g[-1], f[0], f[-1]))
    extra = g[(g > f[0]) & (g < f[-1])]
    union = np.union1d(f, extra)
    return union, np.interp(union, f, values)


def decay_rate(G: BathSpectrum, F: FilterFunction, alpha: Optional[float] = None) -> DecayPrediction:
    """Overlap-integral decay rate at the filter's observation time.

    The integral runs over the union of the filter grid and the tabulated
    spectrum nodes inside it, and stops once G F stays below 1e-9 of its peak.
    """
    alpha = _check_alpha(alpha)
    f, filter_values = _union_frequencies(G, F)
    spectrum = np.asarray(evaluate_spectrum(G, f))
    if np.any(spectrum < 0):
        raise InvalidArgument("Spectrum has negative values")

    integrand = spectrum * filter_values
    peak = float(np.max(integrand)) if integrand.size else 0.0
    if peak > 0:
        above = np.nonzero(integrand >= model_config["overlap_truncation"] * peak)[0]
        stop = min(int(above[-1]) + 2, f.size)
        overlap = float(trapezoid(integrand[:stop], f[:stop]))
    else:
        overlap = 0.0

    t = F.observation_time
    rate = 2 * alpha * overlap / t
    coherence = math.exp(-rate * t)
    return DecayPrediction(rate, t, coherence, (1 + coherence) / 2, f, integrand)


def combine_t1(rate_dephasing: float, t1: Optional[float]) -> float:
    """R_total = R + 2/T1; T1 = None (or inf) means no population decay."""
    if t1 is None or math.isinf(t1):
        return float(rate_dephasing)
    if t1 <= 0:
        raise InvalidArgument("T1 must be positive, got " + str(t1))
    return float(rate_dephasing) + 2.0 / t1


def overlap_grid(w: ControlWaveform, t: float, G: Optional[BathSpectrum] = None) -> FrequencyGrid:
    """Uniform grid with spacing 0.1/t reaching well past the filter's structure."""
    margin = model_config["drive_grid_margin"] / t
    if isinstance(w, PulseTrain):
        n = int(np.count_nonzero(w.pulse_times <= t))
        if w.pulse_duration == 0:
            f_max = 100.0 * (n + 1) / t
        else:
            # quadrature filters: the finite pulse width already cuts the tail
            f_max = 20.0 * (n + 1) / t + 2 * max_rabi_frequency(w)
    elif isinstance(w, ConstantDrive):
        f_max = 2 * w.rabi_frequency + margin
    elif isinstance(w, SidebandDrive):
        f_max = 2 * w.carrier + 3 * w.modulation_frequency + margin
    else:
        f_max = 2 * max_rabi_frequency(w) + margin
    if isinstance(G, Lorentzian):
        f_max = max(f_max, min(10 * G.corner, 10 * f_max))
    return uniform_grid(f_max, model_config["overlap_spacing_factor"] / t)


def continuous_drive_rate(G: BathSpectrum, f0: float, t: float,
                          alpha: Optional[float] = None) -> float:
    """Exact overlap of the constant-drive sinc filter with G; tends to
    (alpha/2) G(f0), i.e. G(f0)/4 at the calibrated alpha, as f0 t grows.

    Raises:
        PreconditionViolation: f0 t below the minimum number of drive cycles.
    """
    if f0 <= 0 or t <= 0:
        raise InvalidArgument("f0 and t must be positive")
    cycles = f0 * t
    if cycles < model_config["min_drive_cycles"]:
        raise PreconditionViolation("Need f0*t >= %d for the sinc filter, got %.3g"
                                    % (model_config["min_drive_cycles"], cycles))
    if cycles < model_config["warn_drive_cycles"]:
        logger.warning("f0*t = %.3g < %d: R(f0) departs from G(f0)/4 by more than a few %%",
                       cycles, model_config["warn_drive_cycles"])
    grid = uniform_grid(2 * f0 + model_config["drive_grid_margin"] / t,
                        model_config["overlap_spacing_factor"] / t)
    return decay_rate(G, filter_constant_drive(f0, t, grid), alpha).rate


def invert_spectrum(rates: Sequence[Tuple[float, float, float]], bias: float = 0.0,
                    alpha: Optional[float] = None) -> Tabulated:
    """G(f0) = (2/alpha)(R - bias), clamped at 0, from continuous-drive rates.

    Args:
        rates: (f0 [Hz], R [1/s], sigma_R [1/s]) triples; f0 must be distinct.
        bias:  Rate floor without drive (T1 and readout), subtracted first.
    Returns:
        A Tabulated spectrum whose `clamped` flags mark points where R < bias.
    """
    alpha = _check_alpha(alpha)
    if len(rates) == 0:
        raise InvalidArgument("Need at least one (f0, R, sigma_R) triple")
    table = np.asarray(rates, dtype=float).reshape(-1, 3)
    f0 = table[:, 0]
    if np.unique(f0).size != f0.size:
        raise InvalidArgument("Duplicate drive frequencies in rates")
    order = np.argsort(f0)
    table = table[order]

    factor = 2.0 / alpha
    raw = factor * (table[:, 1] - bias)
    clamped = raw < 0
    if np.any(clamped):
        logger.warning("%d spectrum point(s) below the bias were clamped to 0: %s Hz",
                       int(np.count_nonzero(clamped)), table[clamped, 0].tolist())
    return tabulated_spectrum(table[:, 0], np.where(clamped, 0.0, raw),
                              uncertainties=factor * table[:, 2],
                              origin="measured", clamped=clamped)


def sideband_extract(R_with: float, R_without: float, beta: float, f_m: float, f0: float,
                     t: float, alpha: Optional[float] = None, uncertainty: float = 0.0,
                     correct_carrier: bool = False, quad=None) -> Tuple[float, float]:
    """Spectrum at the lower sideband f0 - f_m from rates measured with and
    without the AM sideband.

    The rate difference is divided by the sideband filter weight inside
    [f0 - 1.5 f_m, f0 - 0.5 f_m] (computed by quadrature) and by 2 alpha/t.
    With correct_carrier the weight the modulation removes from the carrier is
    added back using G(f0) = (2/alpha) R_without.

    Returns:
        (frequency [Hz], G [1/s])
    Raises:
        InvalidArgument: beta <= 0 (no sideband, nothing to extract).
        InconsistentMeasurement: the rate difference is negative beyond `uncertainty`.
    """
    alpha = _check_alpha(alpha)
    if beta <= 0:
        raise InvalidArgument("Sideband extraction needs beta > 0")
    if f_m <= 0 or f0 <= 0 or t <= 0:
        raise InvalidArgument("f0, f_m and t must be positive")
    inner, outer = model_config["sideband_window"]
    f_side = f0 - f_m

    grid = uniform_grid(f0 + inner * f_m + 10.0 / t, model_config["overlap_spacing_factor"] / t)
    F_side = filter_numeric(sideband_drive(f0, beta, f_m, total_time=t), t, grid, quad)
    weight = filter_area(F_side, f0 - outer * f_m, f0 - inner * f_m)

    delta = R_with - R_without
    if correct_carrier:
        F_carrier = filter_constant_drive(f0, t, grid)
        lost = (filter_area(F_carrier, f0 - inner * f_m, f0 + inner * f_m) -
                filter_area(F_side, f0 - inner * f_m, f0 + inner * f_m))
        delta += (2 * alpha / t) * lost * (2.0 / alpha) * R_without

    if delta < -abs(uncertainty):
        raise InconsistentMeasurement("Rate with sideband is below the rate without it: "
                                      "dR = %.4g 1/s (uncertainty %.3g)" % (delta, uncertainty))
    if weight <= 0:
        raise InvalidArgument("Sideband filter has no weight near %g Hz" % f_side)
    if f_side < 0:
        logger.debug("Lower sideband f0 - f_m = %g Hz folded through zero; reporting %g Hz",
                     f_side, abs(f_side))
    return abs(f_side), max(delta, 0.0) * t / (2 * alpha * weight)


def predicted_rates(G: BathSpectrum, waveform_family: Callable[[float], ControlWaveform],
                    times: Sequence[float], alpha: Optional[float] = None,
                    t1: Optional[float] = None, threads: Optional[int] = None) -> np.ndarray:
    """Total decay rate (dephasing + 2/T1) at each time; waveform_family(t) gives
    the control used for an observation time t."""
    alpha = _check_alpha(alpha)
    times = np.asarray(times, dtype=float).reshape(-1)
    if np.any(np.diff(times) < 0):
        raise InvalidArgument("times must be sorted ascending")

    def rate_at(t):
        if t <= 0:
            return combine_t1(0.0, t1)
        w = waveform_family(t)
        F = filter_for_waveform(w, t, overlap_grid(w, t, G))
        return combine_t1(decay_rate(G, F, alpha).rate, t1)

    with ThreadPoolExecutor(max_workers=threads) as executor:
        return np.asarray(list(executor.map(rate_at, times)))


def coherence_curve(G: BathSpectrum, waveform_family: Callable[[float], ControlWaveform],
                    times: Sequence[float], alpha: Optional[float] = None,
                    t1: Optional[float] = None, threads: Optional[int] = None) -> CoherenceCurve:
    """Predicted C(t) = exp(-R_total(t) t), rebuilding the filter at every t."""
    rates = predicted_rates(G, waveform_family, times, alpha, t1, threads)
    times = np.asarray(times, dtype=float).reshape(-1)
    return coherence_curve_from(times, np.exp(-rates * times))


def coherence_time(G: BathSpectrum, waveform: ControlWaveform, t: float,
                   alpha: Optional[float] = None, t1: Optional[float] = None) -> float:
    """1/R_total for the waveform observed over t."""
    F = filter_for_waveform(waveform, t, overlap_grid(waveform, t, G))
    rate = combine_t1(decay_rate(G, F, alpha).rate, t1)
    return math.inf if rate == 0 else 1.0 / rate


def sequence_coherence_times(G: BathSpectrum, kind: str, pulse_counts: Sequence[int], T: float,
                             alpha: Optional[float] = None, t1: Optional[float] = None,
                             phase_pattern: str = "Uniform"):
    """[(n_pulses, coherence time)] for one sequence kind at total time T.

    CDD takes the admissible counts inside [min(pulse_counts), max(pulse_counts)]
    since its pulse number is fixed by the concatenation order.
    """
    if kind == "CDD":
        specs = [sequence_spec("CDD", T, cdd_order=order, phase_pattern=phase_pattern)
                 for order, _ in admissible_cdd_counts(max(pulse_counts), min(pulse_counts))]
    else:
        specs = [sequence_spec(kind, T, n_pulses=n, phase_pattern=phase_pattern)
                 for n in pulse_counts]
    return [(spec.n_pulses, coherence_time(G, sequence_waveform(spec), T, alpha, t1))
            for spec in specs]


def _lorentzian_curve(f, g0, corner):
    return g0 / (1 + (f / corner)**2)


def fit_lorentzian(G: Tabulated) -> Tuple[Lorentzian, np.ndarray]:
    """Least-squares Lorentzian through a tabulated spectrum, weighted by its
    uncertainties when present. Returns the model and the (g0, f_c) covariance."""
    f = np.asarray(G.grid.values, dtype=float)
    values = np.asarray(G.values, dtype=float)
    if f.size < 3:
        raise InvalidArgument("Need >= 3 spectrum points for a Lorentzian fit")
    sigma = None
    if G.uncertainties is not None and np.all(np.asarray(G.uncertainties) > 0):
        sigma = np.asarray(G.uncertainties, dtype=float)
    g0_guess = max(float(values[0]), float(np.max(values)), 1e-12)
    below_half = np.nonzero(values < g0_guess / 2)[0]
    corner_guess = float(f[below_half[0]]) if below_half.size else float(f[-1])
    corner_guess = max(corner_guess, float(f[f > 0][0]) if np.any(f > 0) else 1.0)
    params, cov = curve_fit(_lorentzian_curve, f, values, p0=(g0_guess, corner_guess),
                            sigma=sigma, absolute_sigma=sigma is not None,
                            bounds=((0, 1e-12), (np.inf, np.inf)))
    return lorentzian_spectrum(params[0], params[1], origin="fit:" + str(G.origin)), cov
