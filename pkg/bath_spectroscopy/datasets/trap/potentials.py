"""Trap geometry, potentials and thermal initial conditions.

Positions in m, velocities in m/s, energies in J. The x-y plane is radial
and z is axial for the harmonic trap; crossed beams propagate in the x-y
plane at +-crossing_angle/2 from the x axis.
"""
import math
from functools import partial
from typing import Optional, Tuple
from collections import namedtuple

import numpy as np
import jax
import jax.numpy as jnp
from jax import random

from ...errors import InvalidArgument, PreconditionViolation
from .configs import config as trap_config_table

POTENTIAL_SHAPES = ("Harmonic3D", "CrossedGaussian")

CrossedGaussian = namedtuple("CrossedGaussian", ["waist", "power", "wavelength", "crossing_angle"])

TrapConfig = namedtuple(
    "TrapConfig",
    ["radial_frequency", "axial_frequency", "temperature", "atom_mass",
     "differential_shift_ratio", "potential_shape", "beams", "gravity"],
    defaults=(trap_config_table["atom_mass"], trap_config_table["differential_shift_ratio"],
              "Harmonic3D", None, False),
)

# fold_in stream tags, so initial conditions and dynamics never share keys
INIT_STREAM = 0
DYNAMICS_STREAM = 1


def trap_config(radial_frequency: Optional[float] = None,
                axial_frequency: Optional[float] = None,
                temperature: float = 7e-6,
                atom_mass: float = trap_config_table["atom_mass"],
                differential_shift_ratio: float = trap_config_table["differential_shift_ratio"],
                potential_shape: str = "Harmonic3D",
                beams: Optional[CrossedGaussian] = None,
                gravity: bool = False) -> TrapConfig:
    """Validating constructor.

    For CrossedGaussian traps the radial and axial frequencies are derived
    from the curvature at the trap center (largest and smallest) and any
    values passed in are ignored.
    """
    if potential_shape not in POTENTIAL_SHAPES:
        raise InvalidArgument("Unknown potential shape: " + str(potential_shape))
    if temperature <= 0 or atom_mass <= 0 or differential_shift_ratio <= 0:
        raise InvalidArgument("temperature, atom_mass and differential_shift_ratio must be positive")

    if potential_shape == "CrossedGaussian":
        if beams is None:
            raise InvalidArgument("CrossedGaussian needs beam parameters")
        if min(beams.waist, beams.power, beams.wavelength) <= 0:
            raise InvalidArgument("waist, power and wavelength must be positive")
        if gravity:
            raise InvalidArgument("Gravity is only supported for Harmonic3D traps")
        beams = CrossedGaussian(*(float(x) for x in beams))
        trap = TrapConfig(1.0, 1.0, float(temperature), float(atom_mass),
                          float(differential_shift_ratio), potential_shape, beams, False)
        freqs = trap_frequencies(trap)
        if not np.all(np.isfinite(freqs)) or freqs[0] <= 0:
            raise InvalidArgument("Beams do not form a 3D trap: frequencies %s Hz" % freqs.tolist())
        return trap._replace(radial_frequency=float(freqs[-1]), axial_frequency=float(freqs[0]))

    if radial_frequency is None or axial_frequency is None:
        raise InvalidArgument("Harmonic3D needs radial and axial frequencies")
    if radial_frequency <= 0 or axial_frequency <= 0:
        raise InvalidArgument("Trap frequencies must be positive")
    return TrapConfig(float(radial_frequency), float(axial_frequency), float(temperature),
                      float(atom_mass), float(differential_shift_ratio), potential_shape,
                      None, bool(gravity))


def _angular_frequencies(trap: TrapConfig) -> jnp.ndarray:
    return 2 * jnp.pi * jnp.array([trap.radial_frequency, trap.radial_frequency,
                                   trap.axial_frequency])


def dipole_coefficient(wavelength: float) -> float:
    """U / I in J per W/m^2 for a linearly polarized far-detuned beam,
    (pi c^2 Gamma / 2 w0^3)(2/Delta_2 + 1/Delta_1); negative below the D lines."""
    c = trap_config_table["speed_of_light"]
    gamma = trap_config_table["natural_linewidth"]
    omega_laser = 2 * math.pi * c / wavelength
    omega_d2 = 2 * math.pi * c / trap_config_table["d2_wavelength"]
    omega_d1 = 2 * math.pi * c / trap_config_table["d1_wavelength"]
    prefactor = math.pi * c**2 * gamma / (2 * omega_d2**3)
    return prefactor * (2 / (omega_laser - omega_d2) + 1 / (omega_laser - omega_d1))


def _beam_directions(beams: CrossedGaussian) -> jnp.ndarray:
    half = beams.crossing_angle / 2
    return jnp.array([[math.cos(half), math.sin(half), 0.0],
                      [math.cos(half), -math.sin(half), 0.0]])


def light_potential_fn(trap: TrapConfig):
    """U_light(r), the part of the potential that shifts the clock transition.
    Harmonic traps are measured from their minimum."""
    if trap.potential_shape == "Harmonic3D":
        k = trap.atom_mass * _angular_frequencies(trap)**2

        def harmonic(r):
            return 0.5 * jnp.sum(k * r**2, axis=-1)

        return harmonic

    beams = trap.beams
    coefficient = dipole_coefficient(beams.wavelength)
    peak_intensity = 2 * beams.power / (math.pi * beams.waist**2)
    rayleigh = math.pi * beams.waist**2 / beams.wavelength
    directions = _beam_directions(beams)

    def crossed(r):
        along = r @ directions.T
        radial_sq = jnp.sum(r**2, axis=-1)[..., None] - along**2
        spread = 1 + (along / rayleigh)**2
        intensity = peak_intensity / spread * jnp.exp(-2 * radial_sq / (beams.waist**2 * spread))
        return coefficient * jnp.sum(intensity, axis=-1)

    return crossed


def potential_fn(trap: TrapConfig):
    """Total potential energy: light potential plus gravity along -z when enabled."""
    light = light_potential_fn(trap)
    if not trap.gravity:
        return light
    weight = trap.atom_mass * trap_config_table["gravity"]
    return lambda r: light(r) + weight * r[..., 2]


def equilibrium_position(trap: TrapConfig) -> jnp.ndarray:
    if trap.gravity:
        sag = trap_config_table["gravity"] / (2 * math.pi * trap.axial_frequency)**2
        return jnp.array([0.0, 0.0, -sag])
    return jnp.zeros(3)


def trap_frequencies(trap: TrapConfig) -> np.ndarray:
    """Oscillation frequencies in Hz from the Hessian at the potential minimum, ascending."""
    hessian = jax.hessian(potential_fn(trap))(equilibrium_position(trap))
    curvature = np.linalg.eigvalsh(np.asarray(hessian))
    return np.sqrt(np.clip(curvature, 0.0, None) / trap.atom_mass) / (2 * math.pi)


def trap_depth(trap: TrapConfig) -> float:
    """Energy needed to escape the trap; infinite for the harmonic model."""
    if trap.potential_shape == "Harmonic3D":
        return math.inf
    return float(-light_potential_fn(trap)(jnp.zeros(3)))


def max_trap_frequency(trap: TrapConfig) -> float:
    return max(trap.radial_frequency, trap.axial_frequency)


def thermal_velocities(key, n: int, trap: TrapConfig) -> jnp.ndarray:
    """Maxwell-Boltzmann velocities, (n, 3) in m/s."""
    scale = math.sqrt(trap_config_table["k_B"] * trap.temperature / trap.atom_mass)
    return scale * random.normal(key, shape=(n, 3))


def kinetic_temperature(velocities, atom_mass: float) -> float:
    """T = m <|v|^2> / (3 k_B)."""
    velocities = np.asarray(velocities)
    return float(atom_mass * np.mean(np.sum(velocities**2, axis=-1)) /
                 (3 * trap_config_table["k_B"]))


def total_energy(trap: TrapConfig, r, v):
    return 0.5 * trap.atom_mass * jnp.sum(jnp.asarray(v)**2, axis=-1) + potential_fn(trap)(jnp.asarray(r))


def atom_key(seed: int, atom, stream: int):
    return random.fold_in(random.fold_in(random.PRNGKey(seed), stream), atom)


@partial(jax.jit, static_argnums=(0, 1))
def _propose(trap: TrapConfig, n_proposals: int, keys, chol, hessian, u_min):
    kT = trap_config_table["k_B"] * trap.temperature
    factor = trap_config_table["envelope_temperature_factor"]
    cutoff = trap_config_table["energy_cutoff"]
    potential = light_potential_fn(trap)

    def one_atom(key):
        position_key, accept_key = random.split(key)
        r = random.normal(position_key, shape=(n_proposals, 3)) @ chol.T
        u = potential(r) - u_min
        u_harmonic = 0.5 * jnp.einsum("pi,ij,pj->p", r, hessian, r)
        log_ratio = jnp.minimum(0.0, -u / kT + u_harmonic / (factor * kT))
        ok = (jnp.log(random.uniform(accept_key, shape=(n_proposals,))) < log_ratio) & (u < cutoff * kT)
        return r, ok

    return jax.vmap(one_atom)(keys)


def _rejection_positions(trap: TrapConfig, keys) -> np.ndarray:
    """Positions from exp(-U/kT) by rejection against the harmonic Gaussian at
    a higher temperature, truncated at energy_cutoff k_B T above the minimum.
    Proposals come in rounds of position_proposals per atom; an atom keeps the
    first accepted proposal of the first successful round."""
    kT = trap_config_table["k_B"] * trap.temperature
    if trap_depth(trap) < 2 * trap_config_table["energy_cutoff"] * kT:
        raise PreconditionViolation("Trap depth %.3g K is too shallow for T = %.3g K"
                                    % (trap_depth(trap) / trap_config_table["k_B"], trap.temperature))
    hessian = jax.hessian(light_potential_fn(trap))(jnp.zeros(3))
    covariance = trap_config_table["envelope_temperature_factor"] * kT * jnp.linalg.inv(hessian)
    chol = jnp.linalg.cholesky(covariance)
    u_min = light_potential_fn(trap)(jnp.zeros(3))

    n = keys.shape[0]
    positions = np.zeros((n, 3))
    done = np.zeros(n, dtype=bool)
    for round_index in range(trap_config_table["max_rejection_rounds"]):
        round_keys = jax.vmap(lambda k: random.fold_in(k, round_index))(keys)
        proposals, ok = _propose(trap, trap_config_table["position_proposals"], round_keys,
                                 chol, hessian, u_min)
        proposals, ok = np.asarray(proposals), np.asarray(ok)
        hit = ok.any(axis=1) & ~done
        first = np.argmax(ok, axis=1)
        positions[hit] = proposals[hit, first[hit]]
        done |= hit
        if done.all():
            return positions
    raise PreconditionViolation("Position sampling did not finish: acceptance too low")


def sample_initial_conditions(trap: TrapConfig, atoms, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Thermal positions and velocities for the given atom indices.

    Atom i always receives the same draw for a given seed, whatever the batch
    it is sampled in.
    """
    atoms = np.asarray(atoms).reshape(-1)
    keys = jax.vmap(lambda i: atom_key(seed, i, INIT_STREAM))(jnp.asarray(atoms))
    position_keys, velocity_keys = jax.vmap(random.split, out_axes=1)(keys)
    velocities = jax.vmap(lambda k: thermal_velocities(k, 1, trap)[0])(velocity_keys)

    if trap.potential_shape == "Harmonic3D":
        kT = trap_config_table["k_B"] * trap.temperature
        widths = jnp.sqrt(kT / trap.atom_mass) / _angular_frequencies(trap)
        offsets = jax.vmap(lambda k: random.normal(k, shape=(3,)))(position_keys)
        positions = equilibrium_position(trap) + widths * offsets
        return np.asarray(positions), np.asarray(velocities)
    return _rejection_positions(trap, position_keys), np.asarray(velocities)
