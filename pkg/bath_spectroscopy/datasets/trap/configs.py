import math

from flax.core.frozen_dict import freeze

config = {
    "hbar": 1.054571817e-34,
    "k_B": 1.380649e-23,
    "speed_of_light": 299792458.0,
    "gravity": 9.80665,

    # 87Rb
    "atom_mass": 1.443160648e-25,
    "differential_shift_ratio": 6.6e-5,         #clock-transition shift / trap depth
    "d2_wavelength": 780.241e-9,
    "d1_wavelength": 794.979e-9,
    "natural_linewidth": 2 * math.pi * 6.0666e6,
    "scattering_cross_section": 8 * math.pi * (100 * 5.29177e-11)**2,

    "steps_per_period": 20,                     #dt <= 1/(20 f_max)
    "chunk_size": 64,
    "position_proposals": 64,
    "envelope_temperature_factor": 2.0,
    "energy_cutoff": 10.0,                      #in units of k_B T
    "max_rejection_rounds": 200,

    # more atoms, more collisions, shorter bath memory
    "experiments": {
        "weak_coupling": {
            "radial_frequency": 600.0,
            "axial_frequency": 160.0,
            "temperature": 7e-6,
            "atom_number": 2e6,
        },
        "strong_coupling": {
            "radial_frequency": 600.0,
            "axial_frequency": 160.0,
            "temperature": 7e-6,
            "atom_number": 1.5e5,
        },
        "measured_spectrum": {
            "radial_frequency": 450.0,
            "axial_frequency": 120.0,
            "temperature": 3.5e-6,
            "atom_number": None,
        },
    },
}

config = freeze(config)
