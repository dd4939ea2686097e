"""Bloch-vector dynamics of single detuning realizations and their ensemble coherence.

Each step rotates r = (u, v, w) about omega = (Omega cos phi, Omega sin phi, delta)
by |omega| dt (dr/dt = omega x r). Omega is the mean Rabi frequency over the
step, taken from the exact accumulated angle of the waveform, and delta is
held at the trace sample of the step. Ideal pi pulses are instantaneous
rotations inserted at their exact time inside a step.
"""
import math
import logging
from functools import partial
from typing import Optional, Sequence
from collections import namedtuple

import numpy as np
import jax
import jax.numpy as jnp
from jax import random

from ..errors import InvalidArgument, NumericFailure, PreconditionViolation
from ..utils.misc import run_chunked
from .configs import config as model_config
from .coherence import CoherenceCurve, coherence_curve_from, t1_envelope
from .waveforms import ControlWaveform, PulseTrain, accumulated_phase, max_rabi_frequency

logger = logging.getLogger(__name__)

_bloch = model_config["bloch"]

BlochState = namedtuple("BlochState", ["u", "v", "w"])

EQUAL_SUPERPOSITION = BlochState(1.0, 0.0, 0.0)

# Per-step control, identical for every atom.
StepControls = namedtuple(
    "StepControls",
    ["omega_x", "omega_y", "dressing", "pulse_fraction", "pulse_angle", "pulse_x", "pulse_y"],
)


def rotate(r, omega, tau):
    """Rodrigues rotation of r about omega by the angle |omega| tau."""
    norm = jnp.linalg.norm(omega)
    axis = omega / jnp.where(norm > 0, norm, 1.0)
    angle = norm * tau
    cos, sin = jnp.cos(angle), jnp.sin(angle)
    return r * cos + jnp.cross(axis, r) * sin + axis * jnp.dot(axis, r) * (1 - cos)


def _pulse_phase_at(w: PulseTrain, t: np.ndarray) -> np.ndarray:
    """Phase of the pulse nearest to each time."""
    nearest = np.abs(t[:, None] - np.asarray(w.pulse_times)[None, :]).argmin(axis=1)
    return np.asarray(w.pulse_phases)[nearest]


def step_controls(w: ControlWaveform, dt: float, n_steps: int,
                  dressing_kappa: float = 0.0) -> StepControls:
    """Drive and pulse schedule for n_steps steps of length dt.

    Raises:
        PreconditionViolation: two ideal pulses fall into the same step.
    """
    edges = dt * np.arange(n_steps + 1)
    zeros = np.zeros(n_steps)
    pulse_fraction = np.zeros(n_steps)
    pulse_angle = np.zeros(n_steps)
    pulse_x = np.ones(n_steps)
    pulse_y = np.zeros(n_steps)

    if isinstance(w, PulseTrain) and w.pulse_duration == 0:
        omega = zeros
        phase = zeros
        times = np.asarray(w.pulse_times)
        times = times[times <= edges[-1] * (1 + 1e-12)]
        index = np.minimum(np.floor(times / dt + 1e-9).astype(int), n_steps - 1)
        if np.unique(index).size != index.size:
            raise PreconditionViolation("More than one ideal pulse within a step of %.3g s" % dt)
        pulse_fraction[index] = np.clip(times / dt - index, 0.0, 1.0)
        pulse_angle[index] = w.pulse_area
        pulse_x[index] = np.cos(np.asarray(w.pulse_phases)[:times.size])
        pulse_y[index] = np.sin(np.asarray(w.pulse_phases)[:times.size])
    else:
        if w.total_time is not None and edges[-1] > w.total_time * (1 + 1e-12):
            raise InvalidArgument("Waveform is only defined up to " + str(w.total_time) + " s")
        theta = np.asarray(accumulated_phase(w, edges, check=False))
        omega = np.diff(theta) / dt
        if isinstance(w, PulseTrain):
            phase = _pulse_phase_at(w, (edges[1:] + edges[:-1]) / 2) if len(w.pulse_times) else zeros
        else:
            phase = np.full(n_steps, w.phase)

    # Drive-induced shift of the clock transition, kappa f_R^2 in Hz.
    dressing = 2 * np.pi * dressing_kappa * (omega / (2 * np.pi))**2
    return StepControls(omega * np.cos(phase), omega * np.sin(phase), dressing,
                        pulse_fraction, pulse_angle, pulse_x, pulse_y)


def _evolve(delta_steps, controls: StepControls, dt: float, r0):
    """States after every step for one realization; delta_steps has one value per step."""

    def step(r, inputs):
        delta, wx, wy, shift, fraction, angle, px, py = inputs
        omega = jnp.stack([wx, wy, delta + shift])
        r = rotate(r, omega, fraction * dt)
        r = rotate(r, jnp.stack([px, py, jnp.zeros_like(px)]), angle)
        r = rotate(r, omega, (1 - fraction) * dt)
        return r, r

    _, states = jax.lax.scan(step, r0, (delta_steps,) + tuple(controls))
    """FOR-LOOP equivalent
    for k in range(n_steps):
        r = free rotation up to the pulse, the pulse, free rotation after it
        states.append(r)
    """
    return states


@partial(jax.jit, static_argnums=(3, 4))
def _chunk_states(deltas, controls, sample_index, dt: float, substeps: int, r0):
    """States at sample_index (in substeps, 0 is the initial state) for a chunk of atoms."""

    def one_atom(trace):
        delta_steps = jnp.repeat(trace, substeps)[:controls.omega_x.shape[0]]
        states = jnp.concatenate([r0[None], _evolve(delta_steps, controls, dt, r0)])
        return states[sample_index]

    return jax.vmap(one_atom)(deltas)


def _required_substeps(dt: float, max_delta: float, w: ControlWaveform) -> int:
    fastest = max(max_delta / (2 * math.pi), max_rabi_frequency(w))
    if fastest == 0:
        return 1
    return max(1, int(math.ceil(dt * _bloch["steps_per_cycle"] * fastest - 1e-9)))


def _check_step(dt: float, max_delta: float, w: ControlWaveform):
    needed = _required_substeps(dt, max_delta, w)
    if needed > 1:
        raise PreconditionViolation("Step %.3g s is too coarse for the detuning and drive; "
                                    "use at least %d substeps" % (dt, needed))


def evolve_realization(delta_trace: Sequence[float], w: ControlWaveform, dt: float,
                       initial: BlochState = EQUAL_SUPERPOSITION,
                       substeps: int = 1) -> np.ndarray:
    """Bloch trajectory of one detuning realization.

    Args:
        delta_trace: delta(t_k) in rad/s, held constant over [t_k, t_k + dt).
        dt:          Trace spacing in seconds.
        substeps:    Integration steps per trace sample.
    Returns:
        (n_samples * substeps + 1, 3) array of (u, v, w) at the step boundaries.
    Raises:
        PreconditionViolation: dt/substeps above 1/(20 max(|delta|/2pi, f_Rabi)).
    """
    trace = np.asarray(delta_trace, dtype=float).reshape(-1)
    if trace.size == 0 or dt <= 0 or substeps < 1:
        raise InvalidArgument("Need a non-empty trace, dt > 0 and substeps >= 1")
    step = dt / substeps
    _check_step(step, float(np.max(np.abs(trace))), w)
    n_steps = trace.size * substeps
    controls = StepControls(*(jnp.asarray(c) for c in step_controls(w, step, n_steps)))
    r0 = jnp.asarray(initial, dtype=float)
    states = _evolve(jnp.repeat(jnp.asarray(trace), substeps), controls, step, r0)
    return np.asarray(jnp.concatenate([r0[None], states]))


def bootstrap_coherence(states: np.ndarray, n_samples: int, seed: int = 0) -> np.ndarray:
    """Standard error of |<r>| per sample time from resampling atoms.

    Args:
        states: (n_atoms, n_times, 3) Bloch vectors.
    """
    n_atoms = states.shape[0]
    if n_atoms < 2 or n_samples < 2:
        return np.zeros(states.shape[1])
    draws = np.asarray(random.randint(random.PRNGKey(seed), (n_samples, n_atoms), 0, n_atoms))
    counts = np.zeros((n_samples, n_atoms))
    np.add.at(counts, (np.arange(n_samples)[:, None], draws), 1.0)
    means = np.einsum("ba,atc->btc", counts, states) / n_atoms
    return np.std(np.linalg.norm(means, axis=-1), axis=0, ddof=1)


def ensemble_coherence(ens, w: ControlWaveform, sample_times: Sequence[float],
                       t1: Optional[float] = None, dressing_kappa: float = 0.0,
                       compensate_dressing: bool = True, substeps: Optional[int] = None,
                       threads: Optional[int] = None,
                       bootstrap_samples: int = _bloch["bootstrap_samples"],
                       bootstrap_seed: int = 0,
                       initial: BlochState = EQUAL_SUPERPOSITION) -> CoherenceCurve:
    """C(t) = |<r(t)>| over the atoms of a DetuningEnsemble.

    Each atom starts in `initial` and evolves under its own trace. Sample times
    are rounded to the nearest integration step. The standard errors come from
    a bootstrap over atoms; a T1 envelope exp(-2t/T1) multiplies both.

    Args:
        ens:                 DetuningEnsemble.
        dressing_kappa:      Clock shift per squared Rabi frequency (1/Hz), added to
                             delta during driven steps when compensate_dressing is False.
        substeps:            Integration steps per trace sample; chosen from the
                             resolution requirement when None.
    Raises:
        InvalidArgument: empty ensemble, or sample times outside the traces.
    """
    if ens.n_atoms < 1 or ens.n_steps < 1:
        raise InvalidArgument("Ensemble is empty")
    sample_times = np.asarray(sample_times, dtype=float).reshape(-1)
    if sample_times.size == 0 or np.any(sample_times < 0):
        raise InvalidArgument("Need non-negative sample times")
    duration = ens.dt * ens.n_steps
    if np.max(sample_times) > duration * (1 + 1e-9):
        raise InvalidArgument("Sample time %.4g s beyond the %.4g s traces"
                              % (np.max(sample_times), duration))

    max_delta = float(np.max(np.abs(ens.traces)))
    if substeps is None:
        substeps = _required_substeps(ens.dt, max_delta, w)
    else:
        _check_step(ens.dt / substeps, max_delta, w)
    step = ens.dt / substeps
    sample_index = np.rint(sample_times / step).astype(int)
    n_steps = max(1, int(np.max(sample_index)))

    kappa = 0.0 if compensate_dressing else dressing_kappa
    controls = StepControls(*(jnp.asarray(c) for c in step_controls(w, step, n_steps, kappa)))
    n_trace = int(math.ceil(n_steps / substeps))
    traces = np.asarray(ens.traces[:, :n_trace])
    r0 = jnp.asarray(initial, dtype=float)
    index = jnp.asarray(sample_index)

    def kernel(atoms):
        return (_chunk_states(jnp.asarray(traces[atoms]), controls, index, step, substeps, r0),)

    states, = run_chunked(kernel, ens.n_atoms, _bloch["chunk_size"], threads)

    norm_error = float(np.max(np.abs(np.linalg.norm(states, axis=-1) -
                                     np.linalg.norm(np.asarray(initial)))))
    if norm_error > _bloch["norm_tolerance"]:
        raise NumericFailure("Bloch vector norm drifted", norm_error)

    values = np.linalg.norm(np.mean(states, axis=0), axis=-1)
    stderr = bootstrap_coherence(states, bootstrap_samples, bootstrap_seed)
    envelope = t1_envelope(sample_times, t1)
    logger.debug("ensemble_coherence: %d atoms, %d steps of %.3g s", ens.n_atoms, n_steps, step)
    return coherence_curve_from(sample_times, values * envelope, stderr * envelope)
