"""Control waveforms Omega(t) and their accumulated rotation angle.

Units: Rabi frequencies f0, f_m in Hz; envelopes Omega in rad/s; times in s.
Each variant is an immutable namedtuple; build them with the lowercase
constructors below, which validate the invariants.
"""
from typing import Optional, Sequence, Union
from collections import namedtuple

import numpy as np
import jax.numpy as jnp

from ..errors import InvalidArgument
from .configs import config as model_config
from .utils import is_strictly_increasing

PulseTrain = namedtuple(
    "PulseTrain",
    ["pulse_times", "pulse_phases", "total_time", "pulse_area", "pulse_duration"],
)

ConstantDrive = namedtuple(
    "ConstantDrive",
    ["rabi_frequency", "total_time", "phase"],
    defaults=(None, model_config["drive_phase"]),
)

SidebandDrive = namedtuple(
    "SidebandDrive",
    ["carrier", "modulation_index", "modulation_frequency", "total_time", "phase"],
    defaults=(None, model_config["drive_phase"]),
)

Sampled = namedtuple(
    "Sampled",
    ["times", "omega", "total_time", "phase"],
    defaults=(None, model_config["drive_phase"]),
)

ControlWaveform = Union[PulseTrain, ConstantDrive, SidebandDrive, Sampled]

ExperimentConfig = namedtuple(
    "ExperimentConfig",
    ["observation_time", "alpha", "t1_time", "rng_seed"],
    defaults=(model_config["alpha"], None, 0),
)


def pulse_train(pulse_times: Sequence[float],
                total_time: float,
                pulse_phases: Optional[Sequence[float]] = None,
                pulse_duration: float = 0.0) -> PulseTrain:
    """Builds a train of pi pulses.
    Args:
        pulse_times:    Pulse centers in seconds, strictly increasing, within [0, total_time].
        total_time:     Observation time T in seconds.
        pulse_phases:   Rotation-axis phase of each pulse (0 is x). All zero if None.
        pulse_duration: Width of each pulse in seconds; 0 for ideal instantaneous pulses.
    """
    times = np.asarray(pulse_times, dtype=float).reshape(-1)
    if total_time <= 0:
        raise InvalidArgument("total_time must be positive, got " + str(total_time))
    if not is_strictly_increasing(times):
        raise InvalidArgument("pulse_times must be strictly increasing")
    if times.size and (times[0] < 0 or times[-1] > total_time):
        raise InvalidArgument("pulse_times must lie within [0, total_time]")
    if pulse_phases is None:
        phases = np.zeros_like(times)
    else:
        phases = np.asarray(pulse_phases, dtype=float).reshape(-1)
    if phases.shape != times.shape:
        raise InvalidArgument("Need one phase per pulse, got " + str(phases.size) +
                              " phases for " + str(times.size) + " pulses.")
    if pulse_duration < 0:
        raise InvalidArgument("pulse_duration must be non-negative")
    if pulse_duration > 0 and times.size > 1 and np.min(np.diff(times)) < pulse_duration:
        raise InvalidArgument("Finite pulses overlap: spacing below pulse_duration")
    return PulseTrain(times, phases, float(total_time), model_config["pulse_area"],
                      float(pulse_duration))


def constant_drive(rabi_frequency: float,
                   total_time: Optional[float] = None,
                   phase: float = model_config["drive_phase"]) -> ConstantDrive:
    if rabi_frequency <= 0:
        raise InvalidArgument("Rabi frequency f0 must be positive, got " + str(rabi_frequency))
    if total_time is not None and total_time <= 0:
        raise InvalidArgument("total_time must be positive")
    return ConstantDrive(float(rabi_frequency), total_time, phase)


def sideband_drive(carrier: float,
                   modulation_index: float,
                   modulation_frequency: float,
                   total_time: Optional[float] = None,
                   phase: float = model_config["drive_phase"]) -> SidebandDrive:
    """AM drive Omega(t) = 2 pi f0 (1 + beta (f_m/f0) cos(2 pi f_m t)). A weak
    sideband at f0 - f_m covers low frequencies while the carrier sits high."""
    if carrier <= 0 or modulation_frequency <= 0:
        raise InvalidArgument("carrier and modulation_frequency must be positive")
    if modulation_index < 0:
        raise InvalidArgument("modulation_index must be non-negative")
    if total_time is not None and total_time <= 0:
        raise InvalidArgument("total_time must be positive")
    return SidebandDrive(float(carrier), float(modulation_index),
                         float(modulation_frequency), total_time, phase)


def sampled(times: Sequence[float],
            omega: Sequence[float],
            total_time: Optional[float] = None,
            phase: float = model_config["drive_phase"]) -> Sampled:
    """Piecewise-linear envelope through (times, omega); omega in rad/s."""
    times = np.asarray(times, dtype=float).reshape(-1)
    omega = np.asarray(omega, dtype=float).reshape(-1)
    if times.shape != omega.shape or times.size < 2:
        raise InvalidArgument("Sampled waveform needs >= 2 (time, omega) pairs of equal length")
    if not is_strictly_increasing(times) or times[0] < 0:
        raise InvalidArgument("Sampled time grid must be strictly increasing from t >= 0")
    if total_time is None:
        total_time = float(times[-1])
    return Sampled(times, omega, float(total_time), phase)


def max_rabi_frequency(w: ControlWaveform) -> float:
    """Largest instantaneous Rabi frequency Omega/2pi in Hz."""
    if isinstance(w, PulseTrain):
        if w.pulse_duration > 0 and len(w.pulse_times):
            return w.pulse_area / (2 * np.pi * w.pulse_duration)
        return 0.0
    if isinstance(w, ConstantDrive):
        return w.rabi_frequency
    if isinstance(w, SidebandDrive):
        return w.carrier + w.modulation_index * w.modulation_frequency
    if isinstance(w, Sampled):
        return float(np.max(np.abs(w.omega))) / (2 * np.pi)
    raise InvalidArgument("Unknown waveform type: " + type(w).__name__)


def _check_times(w: ControlWaveform, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidArgument("Time must be non-negative")
    if w.total_time is not None and np.any(t > w.total_time * (1 + 1e-12)):
        raise InvalidArgument("Time beyond the observation window T=" + str(w.total_time))


def _sampled_nodes(w: Sampled):
    """Cumulative angle at the grid nodes (trapezoid of a piecewise-linear Omega)."""
    steps = np.diff(w.times) * (w.omega[1:] + w.omega[:-1]) / 2
    return np.concatenate([[0.0], np.cumsum(steps)])


def accumulated_phase(w: ControlWaveform, t, check: bool = True):
    """theta(t) = int_0^t Omega(s) ds, in radians. Works elementwise on arrays of t.

    Ideal pulse trains give a step function rising by pi at each pulse time
    (a pulse at exactly t counts as applied); finite pulses ramp linearly over
    their duration, centered on the pulse time.
    """
    if check:
        _check_times(w, t)
    t = jnp.asarray(t, dtype=float)

    if isinstance(w, PulseTrain):
        centers = jnp.asarray(w.pulse_times)
        if centers.size == 0:
            return jnp.zeros_like(t)
        if w.pulse_duration > 0:
            progress = jnp.clip((t[..., None] - centers + w.pulse_duration / 2) / w.pulse_duration,
                                0.0, 1.0)
        else:
            progress = (t[..., None] >= centers).astype(t.dtype)
        return w.pulse_area * jnp.sum(progress, axis=-1)

    if isinstance(w, ConstantDrive):
        return 2 * jnp.pi * w.rabi_frequency * t

    if isinstance(w, SidebandDrive):
        return (2 * jnp.pi * w.carrier * t +
                w.modulation_index * jnp.sin(2 * jnp.pi * w.modulation_frequency * t))

    if isinstance(w, Sampled):
        nodes = jnp.asarray(w.times)
        omega = jnp.asarray(w.omega)
        theta_nodes = jnp.asarray(_sampled_nodes(w))
        # Beyond the last node the envelope is held at zero.
        tc = jnp.clip(t, nodes[0], nodes[-1])
        idx = jnp.clip(jnp.searchsorted(nodes, tc, side="right") - 1, 0, nodes.size - 2)
        h = nodes[idx + 1] - nodes[idx]
        s = tc - nodes[idx]
        slope = (omega[idx + 1] - omega[idx]) / h
        return theta_nodes[idx] + omega[idx] * s + slope * s**2 / 2

    raise InvalidArgument("Unknown waveform type: " + type(w).__name__)


def rabi_envelope(w: ControlWaveform, t):
    """Omega(t) in rad/s. Ideal pulses are delta functions and contribute 0 here."""
    t = jnp.asarray(t, dtype=float)
    if isinstance(w, PulseTrain):
        if w.pulse_duration == 0 or len(w.pulse_times) == 0:
            return jnp.zeros_like(t)
        inside = jnp.abs(t[..., None] - jnp.asarray(w.pulse_times)) < w.pulse_duration / 2
        return w.pulse_area / w.pulse_duration * jnp.any(inside, axis=-1).astype(t.dtype)
    if isinstance(w, ConstantDrive):
        return jnp.full_like(t, 2 * jnp.pi * w.rabi_frequency)
    if isinstance(w, SidebandDrive):
        return 2 * jnp.pi * (w.carrier + w.modulation_index * w.modulation_frequency *
                             jnp.cos(2 * jnp.pi * w.modulation_frequency * t))
    if isinstance(w, Sampled):
        inside = (t >= w.times[0]) & (t <= w.times[-1])
        return jnp.where(inside, jnp.interp(t, jnp.asarray(w.times), jnp.asarray(w.omega)), 0.0)
    raise InvalidArgument("Unknown waveform type: " + type(w).__name__)


def finite_pulse_waveform(train: PulseTrain,
                          pulse_duration: float = model_config["finite_pulse_duration"],
                          samples_per_pulse: int = 8) -> Sampled:
    """Rectangular pi pulses of the given width as a Sampled envelope.

    Each rectangle is described by four nodes (two per edge) with a ramp of
    pulse_duration/samples_per_pulse so the area stays exactly pi.
    """
    if pulse_duration <= 0:
        raise InvalidArgument("pulse_duration must be positive")
    T = train.total_time
    ramp = pulse_duration / samples_per_pulse
    height = train.pulse_area / (pulse_duration - ramp)
    times, omega = [0.0], [0.0]
    for center in train.pulse_times:
        start = center - pulse_duration / 2
        stop = center + pulse_duration / 2
        if start < 0 or stop > T:
            raise InvalidArgument("Pulse at " + str(center) + " s does not fit into [0, T]")
        for node, value in ((start, 0.0), (start + ramp, height),
                            (stop - ramp, height), (stop, 0.0)):
            if node > times[-1]:
                times.append(node)
                omega.append(value)
            else:
                omega[-1] = max(omega[-1], value)
    if T > times[-1]:
        times.append(T)
        omega.append(0.0)
    return sampled(times, omega, total_time=T)


def describe(w: ControlWaveform) -> str:
    """One-line summary used in exported files."""
    if isinstance(w, PulseTrain):
        return (f"PulseTrain(n={len(w.pulse_times)}, T={w.total_time:g}s, "
                f"pulse_duration={w.pulse_duration:g}s)")
    if isinstance(w, ConstantDrive):
        return f"ConstantDrive(f0={w.rabi_frequency:g}Hz)"
    if isinstance(w, SidebandDrive):
        return (f"SidebandDrive(f0={w.carrier:g}Hz, beta={w.modulation_index:g}, "
                f"f_m={w.modulation_frequency:g}Hz)")
    if isinstance(w, Sampled):
        return f"Sampled(nodes={len(w.times)}, T={w.total_time:g}s)"
    raise InvalidArgument("Unknown waveform type: " + type(w).__name__)


def experiment_config(observation_time: float,
                      alpha: float = model_config["alpha"],
                      t1_time: Optional[float] = None,
                      rng_seed: int = 0) -> ExperimentConfig:
    if observation_time <= 0:
        raise InvalidArgument("observation_time must be positive")
    if not 0 < alpha <= 1:
        raise InvalidArgument("alpha must lie in (0, 1], got " + str(alpha))
    if t1_time is not None and t1_time <= 0:
        raise InvalidArgument("t1_time must be positive when given")
    return ExperimentConfig(float(observation_time), float(alpha), t1_time, int(rng_seed))
