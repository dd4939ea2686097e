import logging
import math

import numpy as np
import pytest

from bath_spectroscopy.errors import InvalidArgument, InconsistentMeasurement
from bath_spectroscopy.models.filters import (uniform_grid, filter_pulse_train, filter_constant_drive,
                                              filter_numeric)
from bath_spectroscopy.models.overlap import (lorentzian_spectrum, tabulated_spectrum, zero_spectrum,
                                              evaluate_spectrum, decay_rate, combine_t1, overlap_grid,
                                              continuous_drive_rate, invert_spectrum,
                                              sideband_extract, predicted_rates, coherence_curve,
                                              coherence_time, sequence_coherence_times,
                                              fit_lorentzian)
from bath_spectroscopy.models.sequences import sequence_spec, sequence_waveform, with_total_time
from bath_spectroscopy.models.waveforms import pulse_train, sideband_drive


def test_spectrum_constructors():
    G = lorentzian_spectrum(2.0, 10.0)
    assert float(evaluate_spectrum(G, 10.0)) == pytest.approx(1.0)
    T = tabulated_spectrum([0.0, 10.0, 20.0], [1.0, 3.0, 5.0])
    assert float(evaluate_spectrum(T, 5.0)) == pytest.approx(2.0)
    assert float(evaluate_spectrum(T, 50.0)) == pytest.approx(5.0)
    with pytest.raises(InvalidArgument):
        lorentzian_spectrum(0.0, 1.0)
    with pytest.raises(InvalidArgument):
        tabulated_spectrum([0.0, 1.0], [1.0, -1.0])
    with pytest.raises(InvalidArgument):
        tabulated_spectrum([0.0, 1.0], [1.0])


def test_zero_spectrum_gives_zero_rate():
    F = filter_pulse_train([0.5], 1.0, uniform_grid(100.0, 0.1))
    prediction = decay_rate(zero_spectrum(), F)
    assert prediction.rate == 0.0
    assert prediction.coherence == 1.0 and prediction.fidelity == 1.0


def test_white_spectrum_with_nominal_alpha():
    g = 3.0
    white = tabulated_spectrum([0.0, 1e5], [g, g])
    w = pulse_train([0.5], 1.0)
    F = filter_pulse_train(w.pulse_times, 1.0, overlap_grid(w, 1.0, white))
    assert decay_rate(white, F, alpha=0.25).rate == pytest.approx(g / 4, rel=1e-2)
    assert decay_rate(white, F).rate == pytest.approx(g / 2, rel=1e-2)


def test_alpha_range():
    F = filter_pulse_train([0.5], 1.0, uniform_grid(10.0, 0.1))
    with pytest.raises(InvalidArgument):
        decay_rate(zero_spectrum(), F, alpha=1.5)


def test_combine_t1():
    assert combine_t1(1.0, None) == 1.0
    assert combine_t1(1.0, math.inf) == 1.0
    assert combine_t1(1.0, 2.0) == pytest.approx(2.0)
    with pytest.raises(InvalidArgument):
        combine_t1(1.0, 0.0)


def test_continuous_drive_tracks_quarter_spectrum():
    rng = np.random.default_rng(0)
    for g0, corner in zip(rng.uniform(0.1, 10.0, 10), rng.uniform(20.0, 500.0, 10)):
        G = lorentzian_spectrum(g0, corner)
        R = continuous_drive_rate(G, 100.0, 1.0)
        assert R == pytest.approx(float(evaluate_spectrum(G, 100.0)) / 4, rel=2e-2)


def test_continuous_drive_needs_enough_cycles():
    from bath_spectroscopy.errors import PreconditionViolation
    with pytest.raises(PreconditionViolation):
        continuous_drive_rate(lorentzian_spectrum(1.0, 10.0), 5.0, 1.0)


def test_invert_spectrum():
    G = invert_spectrum([(20.0, 0.5, 0.05), (10.0, 1.0, 0.1), (30.0, 0.1, 0.01)], bias=0.2)
    np.testing.assert_allclose(G.grid.values, [10.0, 20.0, 30.0])
    np.testing.assert_allclose(G.values, [3.2, 1.2, 0.0])
    np.testing.assert_allclose(G.uncertainties, [0.4, 0.2, 0.04])
    np.testing.assert_array_equal(G.clamped, [False, False, True])
    with pytest.raises(InvalidArgument):
        invert_spectrum([(10.0, 1.0, 0.1), (10.0, 2.0, 0.1)])
    with pytest.raises(InvalidArgument):
        invert_spectrum([])


def test_forward_then_invert():
    G = lorentzian_spectrum(2.0, 60.0)
    f0s = [50.0, 100.0, 200.0, 400.0]
    rates = [(f0, continuous_drive_rate(G, f0, 1.0), 0.0) for f0 in f0s]
    measured = invert_spectrum(rates)
    np.testing.assert_allclose(measured.values, np.asarray(evaluate_spectrum(G, np.array(f0s))),
                               rtol=3e-2)


def test_zero_spectrum_prediction_is_t1_only():
    spec = sequence_spec("CPMG", 1.0, n_pulses=4)
    family = lambda t: sequence_waveform(with_total_time(spec, t))
    times = [0.1, 0.5, 1.0]
    np.testing.assert_allclose(predicted_rates(zero_spectrum(), family, times, t1=2.2), 2 / 2.2)
    curve = coherence_curve(zero_spectrum(), family, times, t1=2.2)
    np.testing.assert_allclose(curve.values, np.exp(-2 * np.asarray(times) / 2.2))


def test_predicted_rates_are_thread_independent():
    G = lorentzian_spectrum(1.0, 30.0)
    spec = sequence_spec("UDD", 0.4, n_pulses=8)
    family = lambda t: sequence_waveform(with_total_time(spec, t))
    times = [0.1, 0.2, 0.4]
    np.testing.assert_array_equal(predicted_rates(G, family, times, threads=1),
                                  predicted_rates(G, family, times, threads=3))


def test_coherence_time_is_inverse_rate():
    G = lorentzian_spectrum(1.0, 30.0)
    w = sequence_waveform(sequence_spec("CPMG", 0.4, n_pulses=8))
    rate = predicted_rates(G, lambda t: w, [0.4])[0]
    assert coherence_time(G, w, 0.4) == pytest.approx(1 / rate)
    assert coherence_time(zero_spectrum(), w, 0.4) == math.inf


def test_sequence_ranking_on_lorentzian():
    G = lorentzian_spectrum(0.5, 30.0)
    counts = [4, 8, 16, 32, 64]
    cpmg = dict(sequence_coherence_times(G, "CPMG", counts, 0.4))
    udd = dict(sequence_coherence_times(G, "UDD", counts, 0.4))
    cdd = dict(sequence_coherence_times(G, "CDD", counts, 0.4))
    assert sorted(cdd) == [5, 10, 21, 42]
    times = [cpmg[n] for n in counts]
    assert all(b >= a * (1 - 1e-9) for a, b in zip(times, times[1:]))
    for n in counts:
        assert cpmg[n] >= udd[n] * (1 - 1e-9)
    for n in cdd:
        assert dict(sequence_coherence_times(G, "CPMG", [n], 0.4))[n] >= cdd[n] * (1 - 1e-9)


def test_fit_lorentzian_recovers_parameters():
    f = np.linspace(0.0, 500.0, 60)
    truth = lorentzian_spectrum(3.0, 45.0)
    G = tabulated_spectrum(f, np.asarray(evaluate_spectrum(truth, f)), np.full(f.size, 0.01))
    fitted, cov = fit_lorentzian(G)
    assert fitted.g0 == pytest.approx(3.0, rel=1e-4)
    assert fitted.corner == pytest.approx(45.0, rel=1e-4)
    assert cov.shape == (2, 2)


@pytest.mark.slow
def test_sideband_recovers_low_frequency_spectrum():
    G = lorentzian_spectrum(1.0, 10.0)
    f0, f_m, beta, t = 200.0, 180.0, 0.3, 0.5
    grid = uniform_grid(900.0, 0.2)
    without = decay_rate(G, filter_constant_drive(f0, t, grid)).rate
    with_sideband = decay_rate(G, filter_numeric(sideband_drive(f0, beta, f_m, total_time=t), t,
                                                 grid)).rate
    f_side, value = sideband_extract(with_sideband, without, beta, f_m, f0, t,
                                     correct_carrier=True)
    assert f_side == pytest.approx(20.0)
    assert value == pytest.approx(float(evaluate_spectrum(G, 20.0)), rel=0.1)


def test_sideband_errors():
    with pytest.raises(InvalidArgument):
        sideband_extract(1.0, 1.0, 0.0, 10.0, 100.0, 1.0)
    with pytest.raises(InconsistentMeasurement):
        sideband_extract(0.5, 1.0, 0.3, 80.0, 100.0, 1.0, uncertainty=0.1)


def _cpmg8_on():
    grid = uniform_grid(200.0, 0.1)
    return grid, filter_pulse_train(sequence_waveform(sequence_spec("CPMG", 1.0, n_pulses=8))
                                    .pulse_times, 1.0, grid)


def test_decay_rate_is_linear_in_spectrum():
    grid, F = _cpmg8_on()
    f = np.asarray(grid.values)
    lorentz = np.asarray(evaluate_spectrum(lorentzian_spectrum(2.0, 15.0), f))
    bump = np.exp(-((f - 40.0) / 5.0)**2)
    r1 = decay_rate(tabulated_spectrum(grid, lorentz), F).rate
    r2 = decay_rate(tabulated_spectrum(grid, bump), F).rate
    combined = decay_rate(tabulated_spectrum(grid, lorentz + 3 * bump), F).rate
    assert combined == pytest.approx(r1 + 3 * r2, rel=1e-6)
    doubled = decay_rate(tabulated_spectrum(grid, 2 * lorentz), F).rate
    assert doubled == pytest.approx(2 * r1, rel=1e-9)


def test_decay_rate_grows_with_spectrum():
    grid, F = _cpmg8_on()
    f = np.asarray(grid.values)
    base = np.asarray(evaluate_spectrum(lorentzian_spectrum(1.0, 25.0), f))
    r_base = decay_rate(tabulated_spectrum(grid, base), F).rate
    rng = np.random.default_rng(1)
    for center, width, height in zip(rng.uniform(0.0, 150.0, 10), rng.uniform(0.5, 10.0, 10),
                                     rng.uniform(0.01, 2.0, 10)):
        bump = height * np.exp(-((f - center) / width)**2)
        assert decay_rate(tabulated_spectrum(grid, base + bump), F).rate >= r_base * (1 - 1e-9)


def test_sideband_folded_through_zero_is_logged(caplog):
    with caplog.at_level(logging.DEBUG, logger="bath_spectroscopy.models.overlap"):
        f_side, value = sideband_extract(1.1, 1.0, 0.3, 150.0, 100.0, 1.0)
    assert f_side == pytest.approx(50.0)
    assert value > 0
    assert "folded through zero" in caplog.text
