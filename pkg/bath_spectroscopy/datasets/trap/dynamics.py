"""Classical motion of independent atoms in the trap with thermal collisions.

Each step records the light potential at the current position, then applies
a collision (velocity redraw) with probability 1 - exp(-Gamma dt), then
propagates the motion by dt. Harmonic traps are propagated by the exact
phase-space rotation of every axis; other potentials by velocity Verlet with
forces from jax.grad.
"""
import math
import logging
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np
import jax
import jax.numpy as jnp
from jax import random

from ...errors import InvalidArgument, PreconditionViolation
from ...models.filters import frequency_grid
from ...utils.misc import run_chunked
from ..ensemble import DetuningEnsemble, make_ensemble, spectrum_from_traces
from .configs import config as trap_config_table
from .collisions import CollisionConfig, collision_config, step_probability
from .potentials import (TrapConfig, DYNAMICS_STREAM, light_potential_fn, potential_fn,
                         equilibrium_position, max_trap_frequency, sample_initial_conditions,
                         atom_key, total_energy)

logger = logging.getLogger(__name__)


def _propagator(trap: TrapConfig, dt: float):
    if trap.potential_shape == "Harmonic3D":
        omega = 2 * jnp.pi * jnp.array([trap.radial_frequency, trap.radial_frequency,
                                        trap.axial_frequency])
        cos, sin = jnp.cos(omega * dt), jnp.sin(omega * dt)
        center = equilibrium_position(trap)

        def rotate(r, v):
            x = r - center
            return center + x * cos + v * sin / omega, -x * omega * sin + v * cos

        return rotate

    force = jax.grad(lambda r: -potential_fn(trap)(r))
    mass = trap.atom_mass

    def verlet(r, v):
        v_half = v + 0.5 * dt * force(r) / mass
        r_new = r + dt * v_half
        return r_new, v_half + 0.5 * dt * force(r_new) / mass

    return verlet


@partial(jax.jit, static_argnums=(0, 1, 2, 3))
def _atoms_chunk(trap: TrapConfig, n_steps: int, dt: float, p_collision: float, keys, r0, v0):
    light = light_potential_fn(trap)
    propagate = _propagator(trap, dt)
    thermal_speed = math.sqrt(trap_config_table["k_B"] * trap.temperature / trap.atom_mass)

    def one_atom(key, r, v):

        def step(carry, k):
            r, v, n_collisions = carry
            u = light(r)
            collide_key, velocity_key = random.split(random.fold_in(key, k))
            hit = random.uniform(collide_key) < p_collision
            v = jnp.where(hit, thermal_speed * random.normal(velocity_key, shape=(3,)), v)
            r, v = propagate(r, v)
            return (r, v, n_collisions + hit.astype(jnp.int32)), u

        (r, v, n_collisions), potential = jax.lax.scan(step, (r, v, jnp.zeros((), jnp.int32)),
                                                             jnp.arange(n_steps))
        """FOR-LOOP equivalent
        for k in range(n_steps):
            potential.append(light(r))
            if collision at step k: v = thermal draw
            r, v = propagate(r, v)
        """
        return potential, r, v, n_collisions

    return jax.vmap(one_atom)(keys, r0, v0)


def _check_step(trap: TrapConfig, duration: float, dt: float, n_atoms: int) -> int:
    if duration <= 0 or dt <= 0:
        raise InvalidArgument("duration and dt must be positive")
    if n_atoms < 1:
        raise InvalidArgument("Need n_atoms >= 1")
    limit = 1.0 / (trap_config_table["steps_per_period"] * max_trap_frequency(trap))
    if dt > limit * (1 + 1e-9):
        raise PreconditionViolation("dt = %.3g s does not resolve the trap motion; need dt <= %.3g s"
                                    % (dt, limit))
    return max(1, int(round(duration / dt)))


def default_dt(trap: TrapConfig) -> float:
    return 1.0 / (trap_config_table["steps_per_period"] * max_trap_frequency(trap))


def simulate_atoms(trap: TrapConfig, coll: CollisionConfig, n_atoms: int, duration: float,
                   dt: float, seed: int = 0, threads: Optional[int] = None,
                   initial_state: Optional[Tuple[np.ndarray, np.ndarray]] = None):
    """Runs the Monte-Carlo and returns (ensemble, final positions, final
    velocities, collision counts per atom).

    Args:
        initial_state: Optional (positions, velocities), each (n_atoms, 3), used
                       instead of thermal draws.
    """
    n_steps = _check_step(trap, duration, dt, n_atoms)
    p_collision = step_probability(coll, dt)
    chunk_size = trap_config_table["chunk_size"]
    if initial_state is not None:
        r_init = np.asarray(initial_state[0], dtype=float).reshape(n_atoms, 3)
        v_init = np.asarray(initial_state[1], dtype=float).reshape(n_atoms, 3)

    def kernel(atoms):
        keys = jax.vmap(lambda i: atom_key(seed, i, DYNAMICS_STREAM))(jnp.asarray(atoms))
        if initial_state is None:
            r0, v0 = sample_initial_conditions(trap, atoms, seed)
        else:
            r0, v0 = r_init[atoms], v_init[atoms]
        return _atoms_chunk(trap, n_steps, float(dt), p_collision, keys,
                            jnp.asarray(r0), jnp.asarray(v0))

    potential, r_final, v_final, collisions = run_chunked(kernel, n_atoms, chunk_size, threads)

    shift = trap.differential_shift_ratio / trap_config_table["hbar"]
    mean_potential = float(np.mean(potential))
    traces = shift * (potential - mean_potential)
    config = {"trap": trap._asdict(), "collisions": coll._asdict(), "duration": duration,
              "n_atoms": n_atoms, "dt": dt}
    ensemble = make_ensemble(traces, dt, seed, config, offset=shift * mean_potential)
    logger.info("Simulated %d atoms x %d steps: %d collisions, std(delta) = %.4g rad/s",
                n_atoms, n_steps, int(np.sum(collisions)), float(np.std(traces)))
    return ensemble, r_final, v_final, collisions


def simulate_trajectories(trap: TrapConfig, coll: CollisionConfig, n_atoms: int,
                          duration: float, dt: Optional[float] = None, seed: int = 0,
                          threads: Optional[int] = None,
                          initial_state: Optional[Tuple[np.ndarray, np.ndarray]] = None
                          ) -> DetuningEnsemble:
    """Detuning traces delta_i(t) = eta (U(r_i(t)) - <U>)/hbar of thermal atoms.

    Raises:
        PreconditionViolation: dt above 1/(20 f_max) of the trap.
        InvalidArgument: non-positive duration or n_atoms < 1.
    """
    dt = default_dt(trap) if dt is None else dt
    return simulate_atoms(trap, coll, n_atoms, duration, dt, seed, threads, initial_state)[0]


def trajectory(trap: TrapConfig, r0, v0, n_steps: int, dt: float):
    """Collision-free single-atom path: (positions, velocities, energies) at
    the n_steps + 1 times k dt."""
    propagate = jax.jit(_propagator(trap, dt))

    def step(state, _):
        r, v = propagate(*state)
        return (r, v), (r, v)

    _, (positions, velocities) = jax.lax.scan(step, (jnp.asarray(r0, dtype=float),
                                                     jnp.asarray(v0, dtype=float)),
                                              None, length=n_steps)
    positions = jnp.concatenate([jnp.asarray(r0, dtype=float)[None], positions])
    velocities = jnp.concatenate([jnp.asarray(v0, dtype=float)[None], velocities])
    return (np.asarray(positions), np.asarray(velocities),
            np.asarray(total_energy(trap, positions, velocities)))


def collisional_narrowing_scan(trap: TrapConfig, rates: Sequence[float], n_atoms: int,
                               duration: float, dt: Optional[float] = None, seed: int = 0,
                               f_low: Optional[float] = None,
                               threads: Optional[int] = None) -> List[Tuple[float, float]]:
    """Low-frequency spectrum G(f_low) for each collision rate.

    f_low defaults to 10/duration, the lowest frequency the traces resolve.
    Every rate reuses the same seed, so initial conditions are shared.
    """
    if len(rates) < 2:
        raise InvalidArgument("Need at least two collision rates")
    f_low = 10.0 / duration if f_low is None else f_low
    grid = frequency_grid([f_low])
    table = []
    for rate in rates:
        ens = simulate_trajectories(trap, collision_config(rate), n_atoms, duration, dt, seed,
                                    threads)
        G = spectrum_from_traces(ens, grid)
        table.append((float(rate), float(G.values[0])))
        logger.info("Gamma = %8.2f 1/s: G(%.3g Hz) = %.4g", rate, f_low, G.values[0])
    return table
