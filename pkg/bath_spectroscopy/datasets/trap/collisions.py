import math
from typing import Optional
from collections import namedtuple

import numpy as np

from ...errors import InvalidArgument
from .configs import config as trap_config_table
from .potentials import TrapConfig, trap_frequencies

COLLISION_MODELS = ("ThermalRedraw",)

CollisionConfig = namedtuple("CollisionConfig", ["mean_rate", "model", "atom_number"],
                             defaults=("ThermalRedraw", None))


def collision_config(mean_rate: float, model: str = "ThermalRedraw",
                     atom_number: Optional[float] = None) -> CollisionConfig:
    """Elastic collisions as Poisson events of rate mean_rate (1/s), each
    replacing the atom's velocity by a fresh thermal draw. atom_number is
    kept as metadata only."""
    if mean_rate < 0 or not math.isfinite(mean_rate):
        raise InvalidArgument("Collision rate must be finite and >= 0")
    if model not in COLLISION_MODELS:
        raise InvalidArgument("Unknown collision model: " + str(model))
    return CollisionConfig(float(mean_rate), model, atom_number)


def step_probability(coll: CollisionConfig, dt: float) -> float:
    """Probability of a collision within one step, 1 - exp(-Gamma dt)."""
    return float(-np.expm1(-coll.mean_rate * dt))


def mean_relative_speed(trap: TrapConfig) -> float:
    k_B = trap_config_table["k_B"]
    return math.sqrt(16 * k_B * trap.temperature / (math.pi * trap.atom_mass))


def collision_rate(atom_number: float, trap: TrapConfig,
                   cross_section: float = trap_config_table["scattering_cross_section"]) -> float:
    """Mean per-atom collision rate n_mean sigma v_rel for a thermal cloud in
    the harmonic approximation of the trap.

    Args:
        atom_number:   Number of trapped atoms.
        cross_section: Elastic cross-section in m^2 (default 8 pi a^2 with a = 100 a0).
    Returns:
        Gamma in 1/s.
    """
    if atom_number < 0 or cross_section < 0:
        raise InvalidArgument("atom_number and cross_section must be non-negative")
    k_B = trap_config_table["k_B"]
    omega_bar = 2 * math.pi * float(np.prod(trap_frequencies(trap)))**(1 / 3)
    peak_density = (atom_number * omega_bar**3 *
                    (trap.atom_mass / (2 * math.pi * k_B * trap.temperature))**1.5)
    mean_density = peak_density / (2 * math.sqrt(2))
    return mean_density * cross_section * mean_relative_speed(trap)
