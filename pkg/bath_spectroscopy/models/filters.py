"""Filter functions F_t(f) = |int_0^t exp(-2 pi i f s) cos(theta(s)) ds|^2, in s^2.

Only f >= 0 is stored; F is even in f. With this normalization a constant
drive at f0 has F(f0) -> t^2/4 and int F df over all f = t/2, and a bare
observation window (no pulses) has F(0) = t^2.
"""
import math
import logging
from typing import Optional, Sequence
from collections import namedtuple

import numpy as np
import jax.numpy as jnp

from ..errors import InvalidArgument, NumericFailure
from .configs import config as model_config
from .utils import is_strictly_increasing, trapezoid
from .waveforms import (PulseTrain, ConstantDrive, SidebandDrive, Sampled, ControlWaveform,
                        accumulated_phase, max_rabi_frequency, describe)

logger = logging.getLogger(__name__)

FrequencyGrid = namedtuple("FrequencyGrid", ["values", "spacing"])

FilterFunction = namedtuple("FilterFunction", ["grid", "values", "observation_time", "source"])

_quad = model_config["quadrature"]
_PULSE_TRAIN_CHUNK = 8192

QuadratureSettings = namedtuple(
    "QuadratureSettings",
    ["tolerance", "nodes_per_panel", "panels_per_cycle", "max_halvings", "chunk_size"],
    defaults=(_quad["tolerance"], _quad["nodes_per_panel"], _quad["panels_per_cycle"],
              _quad["max_halvings"], _quad["chunk_size"]),
)


def frequency_grid(values: Sequence[float], spacing: str = "custom") -> FrequencyGrid:
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size == 0:
        raise InvalidArgument("Frequency grid is empty")
    if values[0] < 0:
        raise InvalidArgument("Frequency grid must start at f >= 0")
    if not is_strictly_increasing(values):
        raise InvalidArgument("Frequency grid must be strictly increasing")
    if spacing not in ("uniform", "log", "custom"):
        raise InvalidArgument("Unknown grid spacing tag: " + str(spacing))
    return FrequencyGrid(values, spacing)


def uniform_grid(f_max: float, step: float, f_min: float = 0.0) -> FrequencyGrid:
    if step <= 0 or f_max <= f_min:
        raise InvalidArgument("Need step > 0 and f_max > f_min")
    n = int(math.floor((f_max - f_min) / step + 1e-9)) + 1
    return frequency_grid(f_min + step * np.arange(n), "uniform")


def log_grid(f_min: float, f_max: float, n_points: int = model_config["grid_points"],
             include_zero: bool = True) -> FrequencyGrid:
    """n_points log-spaced from f_min to f_max, with f = 0 prepended unless
    include_zero is False."""
    if not 0 < f_min < f_max:
        raise InvalidArgument("Need 0 < f_min < f_max for a log grid")
    values = np.geomspace(f_min, f_max, n_points)
    if include_zero:
        values = np.concatenate([[0.0], values])
    return frequency_grid(values, "log")


def default_grid(t: float, f0: Optional[float] = None, n_pulses: int = 0,
                 n_points: int = model_config["grid_points"]) -> FrequencyGrid:
    """Log grid from 0.1/t up to max(10 f0, 20 n/t): resolves the 1/t-wide
    central lobe and the first harmonics of the sequence."""
    if t <= 0:
        raise InvalidArgument("t must be positive")
    f_min = model_config["grid_low_factor"] / t
    f_max = max(model_config["grid_drive_harmonics"] * (f0 or 0.0),
                model_config["grid_pulse_factor"] * n_pulses / t,
                model_config["grid_pulse_factor"] / t)
    return log_grid(f_min, f_max, n_points)


def _check_observation_time(t: float):
    if t <= 0:
        raise InvalidArgument("Observation time t must be positive, got " + str(t))


def filter_pulse_train(times: Sequence[float], t: float, grid: FrequencyGrid) -> FilterFunction:
    """Closed form for ideal pi pulses: the switching function is +-1 on the
    free intervals [b_k, b_k+1], each contributing
    (-1)^k Delta_k sinc(f Delta_k) exp(-i pi f (b_k + b_k+1))."""
    _check_observation_time(t)
    times = np.asarray(times, dtype=float).reshape(-1)
    if not is_strictly_increasing(times):
        raise InvalidArgument("Pulse times must be sorted and distinct")
    if times.size and (times[0] < 0 or times[-1] > t):
        raise InvalidArgument("Pulse times must lie within [0, t]")

    bounds = jnp.concatenate([jnp.zeros(1), jnp.asarray(times), jnp.full((1,), t)])
    widths = jnp.diff(bounds)
    mids = (bounds[1:] + bounds[:-1]) / 2
    signs = (-1.0)**jnp.arange(widths.size)

    values = []
    for start in range(0, grid.values.size, _PULSE_TRAIN_CHUNK):
        f = jnp.asarray(grid.values[start:start + _PULSE_TRAIN_CHUNK])[:, None]
        amplitude = jnp.sum(signs * widths * jnp.sinc(f * widths) *
                            jnp.exp(-2j * jnp.pi * f * mids), axis=-1)
        values.append(jnp.abs(amplitude)**2)
    return FilterFunction(grid, jnp.concatenate(values), float(t),
                          f"PulseTrain(n={times.size}, T={t:g}s)")


def filter_constant_drive(f0: float, t: float, grid: FrequencyGrid,
                          include_interference: bool = True) -> FilterFunction:
    """Sinc filter of a resonant constant drive.

    The amplitude is (t/2)[e^{-i pi (f-f0) t} sinc((f-f0)t) + e^{-i pi (f+f0) t} sinc((f+f0)t)].
    With include_interference=False the cross term between the two lobes is
    dropped, leaving (t^2/4)[sinc^2(t(f-f0)) + sinc^2(t(f+f0))].
    """
    if f0 <= 0:
        raise InvalidArgument("f0 must be positive")
    _check_observation_time(t)
    f = jnp.asarray(grid.values)
    lower, upper = (f - f0) * t, (f + f0) * t
    if include_interference:
        amplitude = (t / 2) * (jnp.exp(-1j * jnp.pi * lower) * jnp.sinc(lower) +
                               jnp.exp(-1j * jnp.pi * upper) * jnp.sinc(upper))
        values = jnp.abs(amplitude)**2
    else:
        values = (t**2 / 4) * (jnp.sinc(lower)**2 + jnp.sinc(upper)**2)
    return FilterFunction(grid, values, float(t), f"ConstantDrive(f0={f0:g}Hz)")


def _breakpoints(w: ControlWaveform, t: float) -> np.ndarray:
    """Points where cos(theta) is not smooth: pulse edges and sampled nodes."""
    points = [0.0, t]
    if isinstance(w, PulseTrain):
        if w.pulse_duration > 0:
            points += list(w.pulse_times - w.pulse_duration / 2)
            points += list(w.pulse_times + w.pulse_duration / 2)
        else:
            points += list(w.pulse_times)
    elif isinstance(w, Sampled):
        points += list(w.times)
    points = np.asarray(points, dtype=float)
    return np.unique(points[(points >= 0) & (points <= t)])


def _panels(breaks: np.ndarray, max_width: float):
    lefts, rights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(1, int(math.ceil((b - a) / max_width)))
        edges = np.linspace(a, b, n + 1)
        lefts.append(edges[:-1])
        rights.append(edges[1:])
    return np.concatenate(lefts), np.concatenate(rights)


def _amplitude_squared(w: ControlWaveform, freqs: np.ndarray, lefts: np.ndarray,
                       rights: np.ndarray, quad: QuadratureSettings) -> np.ndarray:
    x, wts = np.polynomial.legendre.leggauss(quad.nodes_per_panel)
    half = (rights - lefts)[:, None] / 2
    nodes = ((rights + lefts)[:, None] / 2 + half * x).reshape(-1)
    weights = (half * wts).reshape(-1)
    weighted = jnp.asarray(weights) * jnp.cos(accumulated_phase(w, nodes, check=False))
    nodes = jnp.asarray(nodes)

    values = []
    for start in range(0, freqs.size, quad.chunk_size):
        f = jnp.asarray(freqs[start:start + quad.chunk_size])[:, None]
        amplitude = jnp.exp(-2j * jnp.pi * f * nodes) @ weighted
        values.append(np.asarray(jnp.abs(amplitude)**2))
    return np.concatenate(values)


def filter_numeric(w: ControlWaveform, t: float, grid: FrequencyGrid,
                   quad: Optional[QuadratureSettings] = None) -> FilterFunction:
    """Gauss-Legendre panel quadrature of the filter integral for any waveform.

    Panels are split at every breakpoint of the waveform and are no wider than
    1/(panels_per_cycle (f_max + f_wave)), where f_wave is the largest Rabi
    frequency. The panel width is halved until two successive estimates agree
    to quad.tolerance relative to the filter peak.

    Raises:
        NumericFailure: when max_halvings halvings do not reach the tolerance.
    """
    _check_observation_time(t)
    if w.total_time is not None and t > w.total_time * (1 + 1e-12):
        raise InvalidArgument("Waveform is only defined up to " + str(w.total_time) + " s")
    quad = quad or QuadratureSettings()
    freqs = np.asarray(grid.values, dtype=float)

    highest = freqs[-1] + max_rabi_frequency(w)
    width = t if highest == 0 else min(t, 1.0 / (quad.panels_per_cycle * highest))
    breaks = _breakpoints(w, t)

    coarse = _amplitude_squared(w, freqs, *_panels(breaks, width), quad)
    error = np.inf
    for halving in range(quad.max_halvings):
        width /= 2
        fine = _amplitude_squared(w, freqs, *_panels(breaks, width), quad)
        scale = max(float(np.max(fine)), np.finfo(float).tiny)
        error = float(np.max(np.abs(fine - coarse))) / scale
        logger.debug("filter_numeric halving %d: panel width %.3e s, error %.3e",
                     halving + 1, width, error)
        if error <= quad.tolerance:
            return FilterFunction(grid, jnp.asarray(fine), float(t), describe(w))
        coarse = fine

    raise NumericFailure("Filter quadrature did not converge for " + describe(w), error)


def filter_for_waveform(w: ControlWaveform, t: float, grid: FrequencyGrid,
                        quad: Optional[QuadratureSettings] = None) -> FilterFunction:
    """Analytic filter where a closed form exists, quadrature otherwise."""
    if isinstance(w, PulseTrain) and w.pulse_duration == 0:
        return filter_pulse_train(w.pulse_times[w.pulse_times <= t], t, grid)
    if isinstance(w, ConstantDrive):
        return filter_constant_drive(w.rabi_frequency, t, grid)
    if isinstance(w, (PulseTrain, SidebandDrive, Sampled)):
        return filter_numeric(w, t, grid, quad)
    raise InvalidArgument("Unknown waveform type: " + type(w).__name__)


def filter_area(F: FilterFunction, f_lo: float, f_hi: float) -> float:
    """Trapezoid area of F over [f_lo, f_hi] (clipped to the grid)."""
    f = np.asarray(F.grid.values)
    values = np.asarray(F.values)
    f_lo, f_hi = max(f_lo, f[0]), min(f_hi, f[-1])
    if f_hi <= f_lo:
        return 0.0
    inner = (f > f_lo) & (f < f_hi)
    xs = np.concatenate([[f_lo], f[inner], [f_hi]])
    ys = np.interp(xs, f, values)
    return float(trapezoid(ys, xs))


def peak_frequency(F: FilterFunction) -> float:
    return float(np.asarray(F.grid.values)[int(np.argmax(np.asarray(F.values)))])
