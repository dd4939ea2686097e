import os, warnings, argparse
warnings.filterwarnings('ignore')

import numpy as np
import pandas as pd

from bath_spectroscopy.datasets.trap import (config as trap_table, trap_config, collision_config,
                                             simulate_trajectories)
from bath_spectroscopy.models.bloch import ensemble_coherence
from bath_spectroscopy.models.coherence import coherence_curve_from, fit_decay_rate
from bath_spectroscopy.models.overlap import fit_lorentzian, sequence_coherence_times
from bath_spectroscopy.models.sequences import (sequence_spec, sequence_waveform, with_total_time,
                                               admissible_cdd_counts)
from bath_spectroscopy.spectroscopy.protocol import measure_spectrum
from bath_spectroscopy.utils.io import read_spectrum
from bath_spectroscopy.utils.misc import get_logger

"""### Spectrum: read from a measure-spectrum run, or measured here on the trap bath"""

def get_ensemble(args):
    preset = trap_table["experiments"]["measured_spectrum"]
    trap = trap_config(preset["radial_frequency"], preset["axial_frequency"], preset["temperature"])
    return simulate_trajectories(trap, collision_config(args.collision_rate), args.n_atoms,
                                 args.duration, seed=args.seed, threads=args.threads)

def get_spectrum(args, ens):
    if args.spectrum is not None:
        return read_spectrum(args.spectrum)
    return measure_spectrum(ens, args.rabi_frequencies, args.durations, seed=args.seed,
                            threads=args.threads)

"""### Bloch Monte-Carlo coherence time of one sequence"""

def simulated_coherence_time(ens, spec, threads):
    # one complete sequence per sample time
    times = np.linspace(0.25, 1.0, 4) * spec.total_time
    values, errors = [], []
    for t in times:
        curve = ensemble_coherence(ens, sequence_waveform(with_total_time(spec, t)), [t],
                                   threads=threads)
        values.append(curve.values[0])
        errors.append(curve.stderr[0])
    return 1.0 / fit_decay_rate(coherence_curve_from(times, values, errors)).rate

def main(args):
    get_logger()
    ens = get_ensemble(args) if (args.spectrum is None or args.check_bloch) else None
    G = get_spectrum(args, ens)
    model, cov = fit_lorentzian(G)
    print("Lorentzian fit: g0 = %.4g +- %.2g rad^2/s, f_c = %.4g +- %.2g Hz"
          % (model.g0, np.sqrt(cov[0, 0]), model.corner, np.sqrt(cov[1, 1])))

    rows = []
    for kind in ["CPMG", "UDD", "CDD"]:
        for n, t2 in sequence_coherence_times(model, kind, args.pulse_counts, args.total_time,
                                              t1=args.t1):
            rows.append({"kind": kind, "n_pulses": n, "T2_predicted_s": t2})
    table = pd.DataFrame(rows)

    if args.check_bloch:
        cdd_orders = {count: order for order, count in admissible_cdd_counts(max(args.pulse_counts),
                                                                             min(args.pulse_counts))}
        simulated = []
        for row in rows:
            if row["kind"] == "CDD":
                order = cdd_orders[row["n_pulses"]]
                spec = sequence_spec("CDD", args.total_time, cdd_order=order)
            else:
                spec = sequence_spec(row["kind"], args.total_time, n_pulses=row["n_pulses"])
            simulated.append(simulated_coherence_time(ens, spec, args.threads))
        table["T2_bloch_s"] = simulated

    table = table.sort_values("T2_predicted_s", ascending=False)
    print(table.to_string(index=False, float_format=lambda x: "%.4g" % x))
    best = table.iloc[0]
    print("\nLongest predicted coherence: %s-%d, %.4g s" % (best["kind"], best["n_pulses"],
                                                          best["T2_predicted_s"]))

def get_parser():
    parser = argparse.ArgumentParser(description="Rank CPMG, UDD and CDD sequences by the coherence "
                                                 "time predicted from a measured bath spectrum.")
    parser.add_argument("--spectrum", default=None, help="Spectrum table written by measure-spectrum. "
                        "Measured on the simulated trap bath when absent.")
    parser.add_argument("--pulse_counts", default=[4, 8, 16, 32, 64], type=int, nargs="+")
    parser.add_argument("--total_time", default=0.4, type=float, help="Sequence duration in s.")
    parser.add_argument("--t1", default=None, type=float, help="Population lifetime in s.")
    parser.add_argument("--check_bloch", action="store_true",
                        help="Also simulate every sequence on the trap bath.")
    parser.add_argument("--n_atoms", default=1000, type=int)
    parser.add_argument("--duration", default=1.0, type=float)
    parser.add_argument("--collision_rate", default=50.0, type=float)
    parser.add_argument("--rabi_frequencies", default=[40.0, 60.0, 100.0, 160.0, 240.0, 300.0, 400.0],
                        type=float, nargs="+")
    parser.add_argument("--durations", default=[0.25, 0.5, 0.75, 1.0], type=float, nargs="+")
    parser.add_argument("--seed", default=0, type=int)
    parser.add_argument("--threads", default=os.cpu_count(), type=int)
    return parser

if __name__=="__main__":
    parser = get_parser()
    args = parser.parse_args()
    main(args)
