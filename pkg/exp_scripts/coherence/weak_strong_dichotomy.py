import os, warnings, argparse
warnings.filterwarnings('ignore')

import numpy as np
import pandas as pd

from bath_spectroscopy.datasets.ensemble import (spectrum_from_traces, correlation_time,
                                                 detuning_summary)
from bath_spectroscopy.datasets.trap import (config as trap_table, trap_config, collision_config,
                                             collision_rate, simulate_trajectories)
from bath_spectroscopy.models.bloch import ensemble_coherence
from bath_spectroscopy.models.filters import log_grid
from bath_spectroscopy.models.overlap import continuous_drive_rate, evaluate_spectrum
from bath_spectroscopy.models.waveforms import constant_drive
from bath_spectroscopy.utils.io import write_table
from bath_spectroscopy.utils.misc import get_logger, prepare_out_dir

"""### Bath of one experimental regime"""

def get_bath(regime, n_atoms, duration, seed, threads):
    preset = trap_table["experiments"][regime]
    trap = trap_config(preset["radial_frequency"], preset["axial_frequency"], preset["temperature"])
    rate = collision_rate(preset["atom_number"], trap)
    print("\tCollision rate from N = %.3g: %.1f 1/s" % (preset["atom_number"], rate))
    ens = simulate_trajectories(trap, collision_config(rate, atom_number=preset["atom_number"]),
                                n_atoms, duration, seed=seed, threads=threads)
    G = spectrum_from_traces(ens, log_grid(10.0 / duration, 1500.0, 400))
    return ens, G

"""### Monte-Carlo coherence against the overlap prediction under continuous drives"""

def compare(ens, G, rabi_frequencies, durations, threads):
    variance = float(np.var(ens.traces))
    tau_c = correlation_time(G, variance)
    rows = []
    for f0 in rabi_frequencies:
        curve = ensemble_coherence(ens, constant_drive(f0), durations, threads=threads)
        for t, c, err in zip(durations, curve.values, curve.stderr):
            rate = continuous_drive_rate(G, f0, t)
            predicted = float(np.exp(-rate * t))
            rows.append({"f0_hz": f0, "t_s": t, "C_bloch": c, "C_bloch_err": err,
                         "C_overlap": predicted, "R_tau_c": rate * tau_c,
                         "G_rad2_per_s": float(evaluate_spectrum(G, f0))})
    return pd.DataFrame(rows)

def main(args):
    get_logger()
    durations = np.asarray(args.durations)
    for regime in ["weak_coupling", "strong_coupling"]:
        print(f"\n\t\t-------------{regime.upper()}-----------")
        ens, G = get_bath(regime, args.n_atoms, args.duration, args.seed, args.threads)
        summary = detuning_summary(ens, G)
        print("\tstd(delta) = %.2f rad/s, tau_c = %.3g s, peaks at %s Hz"
              % (summary["std_rad_per_s"], summary["tau_c_s"], summary["peaks_hz"]))
        table = compare(ens, G, args.rabi_frequencies, durations, args.threads)
        table["relative_deviation"] = np.abs(table["C_bloch"] - table["C_overlap"]) / table["C_overlap"]
        print(table.to_string(index=False, float_format=lambda x: "%.4g" % x))
        if args.out_dir:
            prepare_out_dir(args.out_dir)
            write_table(table, os.path.join(args.out_dir, regime))

def get_parser():
    parser = argparse.ArgumentParser(description="Continuous-drive coherence of trapped atoms with "
                                                 "short and long bath memory: Bloch Monte-Carlo "
                                                 "against the filter-overlap prediction.")
    parser.add_argument("--n_atoms", default=2000, type=int, help="Atoms per bath.")
    parser.add_argument("--duration", default=1.0, type=float, help="Length of the detuning traces in s.")
    parser.add_argument("--rabi_frequencies", default=[50.0, 100.0, 200.0, 320.0, 500.0], type=float,
                        nargs="+", help="Drive Rabi frequencies in Hz.")
    parser.add_argument("--durations", default=[0.2, 0.4, 0.6], type=float, nargs="+",
                        help="Drive durations in s.")
    parser.add_argument("--seed", default=0, type=int)
    parser.add_argument("--threads", default=os.cpu_count(), type=int)
    parser.add_argument("--out_dir", default=None, help="Folder for the comparison tables.")
    return parser

if __name__=="__main__":
    parser = get_parser()
    args = parser.parse_args()
    main(args)
