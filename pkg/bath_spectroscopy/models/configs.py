import math

from flax.core.frozen_dict import freeze

config = {
    # R = (2*alpha/t) * int_0^inf G F df. alpha = 1/2 reproduces the exact
    # Gaussian-phase coherence exp(-int G F) and R(f0) = G(f0)/4 for a drive.
    "alpha": 0.5,
    "nominal_alpha": 0.25,

    "pulse_area": math.pi,
    "drive_phase": math.pi / 2,                 #Equatorial axis of continuous drives, orthogonal to (1, 0, 0)
    "finite_pulse_duration": 2.3e-3,

    "grid_points": 400,
    "grid_low_factor": 0.1,                     #f_min = 0.1/t
    "grid_drive_harmonics": 10,                 #f_max >= 10*f0
    "grid_pulse_factor": 20,                    #f_max >= 20*n/T
    "overlap_spacing_factor": 0.1,              #uniform overlap grids use df = 0.1/t
    "overlap_truncation": 1e-9,

    "min_drive_cycles": 10,
    "warn_drive_cycles": 50,
    "drive_grid_margin": 100,                   #continuous drive grid reaches 2*f0 + 100/t

    "sideband_window": (0.5, 1.5),              #lower-sideband window [f0 - 1.5 f_m, f0 - 0.5 f_m]

    "quadrature": {
        "tolerance": 1e-6,
        "nodes_per_panel": 8,
        "panels_per_cycle": 10,
        "max_halvings": 5,
        "chunk_size": 64,
    },

    "bloch": {
        "steps_per_cycle": 20,
        "chunk_size": 64,
        "bootstrap_samples": 200,
        "norm_tolerance": 1e-9,
    },

    "fit": {
        "min_points": 3,
        "nonexponential_chi2": 4.0,
        "curvature_fraction": 0.1,
    },
}

config = freeze(config)
