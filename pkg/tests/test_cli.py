import os
import json

import numpy as np
import pandas as pd
import pytest

from bath_spectroscopy.cli import main, build_parser
from bath_spectroscopy.models.coherence import t1_envelope

SMALL_BATH = {"kind": "exponential", "sigma_rad_per_s": 20.0, "tau_c_s": 0.002,
              "n_atoms": 64, "duration_s": 1.0, "dt_s": 1e-4}


def _config(tmp_path, config, name="config.json"):
    path = os.path.join(tmp_path, name)
    with open(path, "w") as f:
        json.dump(config, f)
    return path


def _run(tmp_path, command, config, *extra):
    out_dir = os.path.join(tmp_path, "out_" + command)
    code = main([command, "--config", _config(tmp_path, config), "--out-dir", out_dir,
                 "--log-level", "WARNING", *extra])
    return code, out_dir


def _manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json")) as f:
        return json.load(f)


def test_parser_defaults():
    args = build_parser().parse_args(["filter", "--config", "c.json"])
    assert (args.out_dir, args.format, args.seed) == ("out", "csv", None)
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["unknown", "--config", "c.json"])
    assert info.value.code == 2


def test_filter_of_shipped_cpmg_config(tmp_path, config_dir):
    out_dir = os.path.join(tmp_path, "out")
    code = main(["filter", "--config", os.path.join(config_dir, "cpmg16_filter.json"),
                 "--out-dir", out_dir])
    assert code == 0
    frame = pd.read_csv(os.path.join(out_dir, "filter.csv"))
    peak = frame["f_hz"][frame["F_s2"].idxmax()]
    assert peak == pytest.approx(8.0, abs=0.1)
    assert _manifest(out_dir)["outputs"][0]["path"] == "filter.csv"


def test_filter_of_constant_drive_as_json(tmp_path):
    config = {"drive": {"rabi_frequency_hz": 50.0, "total_time_s": 0.5},
              "grid": {"spacing": "log", "f_min_hz": 1.0, "f_max_hz": 200.0, "n_points": 300}}
    code, out_dir = _run(tmp_path, "filter", config, "--format", "json")
    assert code == 0
    frame = pd.read_json(os.path.join(out_dir, "filter.json"), orient="records")
    assert len(frame) == 301
    assert frame["f_hz"][frame["F_s2"].idxmax()] == pytest.approx(50.0, rel=0.05)


def test_predict_without_bath_gives_population_decay(tmp_path):
    config = {"spectrum": {"zero": True},
              "sequence": {"kind": "CPMG", "n_pulses": 8, "total_time_s": 0.4},
              "times_s": [0.1, 0.2, 0.4], "t1_s": 2.0, "pulse_counts": [2, 4]}
    code, out_dir = _run(tmp_path, "predict", config)
    assert code == 0
    frame = pd.read_csv(os.path.join(out_dir, "coherence.csv"))
    np.testing.assert_allclose(frame["C"], t1_envelope(frame["t_s"], 2.0), rtol=1e-6)
    times = pd.read_csv(os.path.join(out_dir, "coherence_times.csv"))
    assert list(times["n_pulses"]) == [2, 4]


def test_predict_reads_spectrum_file_next_to_config(tmp_path):
    with open(os.path.join(tmp_path, "G.csv"), "w") as f:
        f.write("f_hz,G_rad2_per_s\n0,1.0\n1000,1.0\n")
    config = {"spectrum": {"file": "G.csv"},
              "sequence": {"kind": "Hahn", "total_time_s": 0.2},
              "times_s": [0.1, 0.2]}
    code, out_dir = _run(tmp_path, "predict", config)
    assert code == 0
    frame = pd.read_csv(os.path.join(out_dir, "coherence.csv"))
    assert np.all(np.diff(frame["C"]) < 0)


def test_simulate_bath_is_reproducible_across_threads(tmp_path):
    config = {"seed": 3, "bath": SMALL_BATH}
    code_one, out_one = _run(tmp_path, "simulate-bath", config, "--threads", "1")
    out_four = os.path.join(tmp_path, "out_four")
    code_four = main(["simulate-bath", "--config", os.path.join(tmp_path, "config.json"),
                      "--out-dir", out_four, "--threads", "4", "--log-level", "WARNING"])
    assert code_one == code_four == 0
    one, four = _manifest(out_one), _manifest(out_four)
    assert one["outputs"] == four["outputs"]
    assert one["config_digest"] == four["config_digest"]
    assert one["seed"] == 3
    assert {o["path"] for o in one["outputs"]} == {"traces.npy", "traces.json", "spectrum.csv",
                                                  "summary.csv"}
    summary = pd.read_csv(os.path.join(out_one, "summary.csv"))
    assert summary["std_rad_per_s"][0] == pytest.approx(20.0, rel=0.1)


def test_seed_flag_overrides_config(tmp_path):
    code, out_dir = _run(tmp_path, "simulate-bath", {"seed": 3, "bath": SMALL_BATH},
                         "--seed", "9")
    assert code == 0
    assert _manifest(out_dir)["seed"] == 9


@pytest.mark.parametrize("config", [
    {"bath": SMALL_BATH, "bogus": 1},
    {"bath": dict(SMALL_BATH, n_atoms="many")},
    {"bath": dict(SMALL_BATH, kind="pink")},
    {"bath": {k: v for k, v in SMALL_BATH.items() if k != "duration_s"}},
])
def test_bad_configs_exit_with_config_error(tmp_path, config):
    code, out_dir = _run(tmp_path, "simulate-bath", config)
    assert code == 2
    assert not os.path.exists(os.path.join(out_dir, "manifest.json"))


def test_missing_and_malformed_config_files(tmp_path):
    assert main(["filter", "--config", os.path.join(tmp_path, "nope.json"),
                 "--out-dir", os.path.join(tmp_path, "out")]) == 2
    bad = os.path.join(tmp_path, "bad.json")
    with open(bad, "w") as f:
        f.write("{\n  \"sequence\": \n")
    assert main(["filter", "--config", bad, "--out-dir", os.path.join(tmp_path, "out")]) == 2


def test_unresolvable_request_exits_with_config_error(tmp_path):
    config = {"bath": SMALL_BATH, "rabi_frequencies_hz": [5.0, 50.0], "durations_s": [0.5, 0.8, 1.0]}
    code, _ = _run(tmp_path, "measure-spectrum", config)
    assert code == 2


def test_verify_passes_and_fails(tmp_path):
    config = {"bath": SMALL_BATH, "rabi_frequencies_hz": [50.0], "durations_s": [0.5, 0.75, 1.0],
              "tolerance": 0.5}
    code, out_dir = _run(tmp_path, "verify", config)
    assert code == 0
    table = pd.read_csv(os.path.join(out_dir, "verify.csv"))
    assert list(table["status"]) == ["PASS"]

    code, out_dir = _run(tmp_path, "verify", dict(config, tolerance=0.0))
    assert code == 4
    table = pd.read_csv(os.path.join(out_dir, "verify.csv"))
    assert list(table["status"]) == ["FAIL"]
    assert _manifest(out_dir)["outputs"][0]["path"] == "verify.csv"
