import os, warnings, argparse
warnings.filterwarnings('ignore')

import pandas as pd

from bath_spectroscopy.models.filters import (uniform_grid, filter_for_waveform, filter_area,
                                              peak_frequency)
from bath_spectroscopy.models.sequences import sequence_spec, sequence_waveform
from bath_spectroscopy.models.waveforms import constant_drive, describe, finite_pulse_waveform
from bath_spectroscopy.utils.io import filter_frame, write_table
from bath_spectroscopy.utils.misc import get_logger, prepare_out_dir

"""### Controls to compare, all at the same observation time"""

def get_controls(args):
    t = args.total_time
    controls = {"Hahn": sequence_waveform(sequence_spec("Hahn", t))}
    for n in args.pulse_counts:
        controls[f"CPMG-{n}"] = sequence_waveform(sequence_spec("CPMG", t, n_pulses=n))
        controls[f"UDD-{n}"] = sequence_waveform(sequence_spec("UDD", t, n_pulses=n))
    for order in args.cdd_orders:
        spec = sequence_spec("CDD", t, cdd_order=order)
        controls[f"CDD-{spec.n_pulses}"] = sequence_waveform(spec)
    for f0 in args.rabi_frequencies:
        controls[f"drive-{f0:g}Hz"] = constant_drive(f0, t)
    if args.pulse_duration > 0:
        n = max(args.pulse_counts)
        train = sequence_waveform(sequence_spec("CPMG", t, n_pulses=n))
        controls[f"CPMG-{n}-finite"] = finite_pulse_waveform(train, args.pulse_duration)
    return controls

def main(args):
    get_logger()
    t = args.total_time
    grid = uniform_grid(args.f_max, args.step)
    if args.out_dir:
        prepare_out_dir(args.out_dir)
    rows = []
    for name, waveform in get_controls(args).items():
        F = filter_for_waveform(waveform, t, grid)
        # 2 int_0^inf F df = t for any control of unit-modulus toggling
        rows.append({"control": name, "peak_hz": peak_frequency(F),
                     "peak_F_s2": float(F.values.max()),
                     "low_band_area": filter_area(F, 0.0, args.low_band),
                     "parseval_ratio": 2 * filter_area(F, 0.0, args.f_max) / t,
                     "description": describe(waveform)})
        if args.out_dir:
            write_table(filter_frame(F), os.path.join(args.out_dir, name))
    table = pd.DataFrame(rows)
    print(table.to_string(index=False, float_format=lambda x: "%.4g" % x))

def get_parser():
    parser = argparse.ArgumentParser(description="Peak frequency, low-frequency leakage and total "
                                                 "weight of the filter functions of pulse sequences "
                                                 "and continuous drives.")
    parser.add_argument("--total_time", default=1.0, type=float, help="Observation time in s.")
    parser.add_argument("--pulse_counts", default=[4, 16, 64], type=int, nargs="+")
    parser.add_argument("--cdd_orders", default=[2, 4], type=int, nargs="+")
    parser.add_argument("--rabi_frequencies", default=[8.0, 32.0], type=float, nargs="+")
    parser.add_argument("--pulse_duration", default=0.0, type=float,
                        help="Width of each pulse in s; 0 for ideal pulses only.")
    parser.add_argument("--f_max", default=400.0, type=float, help="Highest grid frequency in Hz.")
    parser.add_argument("--step", default=0.02, type=float, help="Grid step in Hz.")
    parser.add_argument("--low_band", default=2.0, type=float,
                        help="Upper edge in Hz of the band whose filter weight is reported.")
    parser.add_argument("--out_dir", default=None, help="Folder for the filter tables.")
    return parser

if __name__=="__main__":
    parser = get_parser()
    args = parser.parse_args()
    main(args)
