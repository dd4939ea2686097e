from .configs import config
from .potentials import (TrapConfig, CrossedGaussian, trap_config, trap_frequencies, trap_depth,
                         light_potential_fn, potential_fn, equilibrium_position,
                         thermal_velocities, kinetic_temperature, total_energy,
                         sample_initial_conditions)
from .collisions import CollisionConfig, collision_config, collision_rate, mean_relative_speed
from .dynamics import (simulate_atoms, simulate_trajectories, trajectory, default_dt,
                       collisional_narrowing_scan)
