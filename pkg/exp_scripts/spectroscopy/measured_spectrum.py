import os, warnings, argparse
warnings.filterwarnings('ignore')

import numpy as np

from bath_spectroscopy.datasets.ensemble import spectrum_from_traces
from bath_spectroscopy.datasets.synthetic import ou_ensemble, ou_spectrum
from bath_spectroscopy.datasets.trap import (config as trap_table, trap_config, collision_config,
                                             simulate_trajectories)
from bath_spectroscopy.models.bloch import ensemble_coherence
from bath_spectroscopy.models.coherence import fit_decay_rate
from bath_spectroscopy.models.filters import frequency_grid
from bath_spectroscopy.models.overlap import evaluate_spectrum, sideband_extract
from bath_spectroscopy.models.waveforms import constant_drive, sideband_drive
from bath_spectroscopy.spectroscopy.lineshape import (synthesize_lineshape, fit_rabi_lineshape,
                                                      dressing_calibration)
from bath_spectroscopy.spectroscopy.protocol import measure_spectrum
from bath_spectroscopy.utils.io import scans_frame, spectrum_frame, write_table
from bath_spectroscopy.utils.misc import get_logger, prepare_out_dir

"""### Bath: the trap preset or exponentially correlated noise"""

def get_bath(args):
    if args.bath == "exponential":
        ens = ou_ensemble(args.sigma, args.tau_c, 1e-4, int(round(args.duration / 1e-4)),
                          args.n_atoms, args.seed, args.threads)
        return ens, ou_spectrum(args.sigma, args.tau_c)
    preset = trap_table["experiments"]["measured_spectrum"]
    trap = trap_config(preset["radial_frequency"], preset["axial_frequency"], preset["temperature"])
    ens = simulate_trajectories(trap, collision_config(args.collision_rate), args.n_atoms,
                                args.duration, seed=args.seed, threads=args.threads)
    return ens, None

"""### Dressing shift from Rabi lineshapes at several drive strengths"""

def calibrate_dressing(args):
    points = []
    scan = np.linspace(-150.0, 80.0, 60)
    for i, f_rabi in enumerate([170.0, 255.0, 340.0]):
        shift = args.kappa * f_rabi**2
        population = synthesize_lineshape(scan, shift, 0.5, 0.3, args.pulse_length, noise=0.02,
                                          seed=args.seed + i)
        fit = fit_rabi_lineshape(scan, population, args.pulse_length)
        print("\tf_R = %.0f Hz: fitted shift %.2f Hz (true %.2f)" % (f_rabi, fit.f0_shift, shift))
        points.append((f_rabi, fit.f0_shift))
    return dressing_calibration(points)

"""### One low-frequency point from an amplitude-modulated drive"""

def sideband_point(ens, args):
    t_values = np.asarray(args.durations)
    rates = []
    for w in (constant_drive(args.carrier), sideband_drive(args.carrier, args.beta, args.f_m)):
        curve = ensemble_coherence(ens, w, t_values, threads=args.threads)
        rates.append(fit_decay_rate(curve))
    without, with_ = rates
    return sideband_extract(with_.rate, without.rate, args.beta, args.f_m, args.carrier,
                            float(t_values.max()), uncertainty=with_.rate_error + without.rate_error,
                            correct_carrier=True)

def main(args):
    get_logger()
    ens, exact = get_bath(args)
    if exact is None:
        exact = spectrum_from_traces(ens, frequency_grid(np.geomspace(10.0 / args.duration, 1500.0, 400)))

    if args.kappa != 0:
        print("\n\t\t-------------DRESSING CALIBRATION-----------")
        fit = calibrate_dressing(args)
        print("\tkappa = %.4g +- %.2g 1/Hz (true %.4g)" % (fit.kappa, fit.kappa_error, args.kappa))

    print("\n\t\t-------------SPECTRUM-----------")
    G, points = measure_spectrum(ens, args.rabi_frequencies, args.durations, seed=args.seed,
                                 t1=args.t1, dressing_kappa=args.kappa,
                                 compensate_dressing=not args.uncompensated,
                                 threads=args.threads, return_scans=True)
    table = spectrum_frame(G)
    table["G_direct_rad2_per_s"] = np.asarray(evaluate_spectrum(exact, G.grid.values))
    print(table.to_string(index=False, float_format=lambda x: "%.4g" % x))

    if args.f_m > 0:
        print("\n\t\t-------------SIDEBAND-----------")
        f, g = sideband_point(ens, args)
        print("\tG(%.1f Hz) = %.4g from the sideband, %.4g directly"
              % (f, g, float(evaluate_spectrum(exact, f))))

    if args.out_dir:
        prepare_out_dir(args.out_dir)
        write_table(table, os.path.join(args.out_dir, "spectrum"))
        write_table(scans_frame(points), os.path.join(args.out_dir, "scans"))

def get_parser():
    parser = argparse.ArgumentParser(description="Measure a bath spectrum with continuous drives and "
                                                 "randomized-phase readout, and compare it with the "
                                                 "spectrum of the detuning traces.")
    parser.add_argument("--bath", default="trap", choices=["trap", "exponential"])
    parser.add_argument("--n_atoms", default=1000, type=int)
    parser.add_argument("--duration", default=1.0, type=float, help="Trace length in s.")
    parser.add_argument("--collision_rate", default=50.0, type=float)
    parser.add_argument("--sigma", default=20.0, type=float, help="Exponential bath: std in rad/s.")
    parser.add_argument("--tau_c", default=2e-3, type=float, help="Exponential bath: memory in s.")
    parser.add_argument("--rabi_frequencies", default=[40.0, 60.0, 100.0, 160.0, 240.0, 300.0, 400.0],
                        type=float, nargs="+")
    parser.add_argument("--durations", default=[0.25, 0.5, 0.75, 1.0], type=float, nargs="+")
    parser.add_argument("--t1", default=None, type=float)
    parser.add_argument("--kappa", default=0.0, type=float,
                        help="Dressing shift per squared Rabi frequency to calibrate, in 1/Hz.")
    parser.add_argument("--uncompensated", action="store_true",
                        help="Leave the dressing shift in the driven evolution.")
    parser.add_argument("--pulse_length", default=0.02, type=float,
                        help="Pulse length of the calibration lineshapes in s.")
    parser.add_argument("--carrier", default=200.0, type=float, help="Sideband carrier in Hz.")
    parser.add_argument("--beta", default=0.3, type=float, help="Sideband modulation index.")
    parser.add_argument("--f_m", default=0.0, type=float,
                        help="Modulation frequency in Hz; 0 skips the sideband point.")
    parser.add_argument("--seed", default=0, type=int)
    parser.add_argument("--threads", default=os.cpu_count(), type=int)
    parser.add_argument("--out_dir", default=None)
    return parser

if __name__=="__main__":
    parser = get_parser()
    args = parser.parse_args()
    main(args)
