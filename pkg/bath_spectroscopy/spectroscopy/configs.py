from flax.core.frozen_dict import freeze

config = {
    "readout_noise": 0.05,                      #std of a single population readout
    "samples_per_point": 30,
    "min_samples": 10,

    "envelope": {
        "c_max": 1.2,
        "grid_points": 241,
        "min_phase_nodes": 256,
        "phase_nodes_per_width": 8,             #nodes >= 8 * 2 pi c_max / sigma
        "max_phase_nodes": 16384,
        "confidence_level": 0.6827,
    },

    "lineshape": {
        "f0_grid_points": 801,
    },

    "dressing": {
        "min_points": 3,
    },

    "min_durations": 3,
}

config = freeze(config)
