import math

import numpy as np
import pytest

from bath_spectroscopy.errors import InvalidArgument
from bath_spectroscopy.models.waveforms import (pulse_train, constant_drive, sideband_drive, sampled,
                                                accumulated_phase, rabi_envelope,
                                                finite_pulse_waveform, max_rabi_frequency,
                                                describe, experiment_config)


def test_pulse_train_defaults():
    w = pulse_train([0.25, 0.75], 1.0)
    np.testing.assert_array_equal(w.pulse_phases, [0.0, 0.0])
    assert w.pulse_area == pytest.approx(math.pi)
    assert w.pulse_duration == 0.0


@pytest.mark.parametrize("times, total, phases", [
    ([0.5, 0.25], 1.0, None),
    ([0.5, 0.5], 1.0, None),
    ([0.5, 1.5], 1.0, None),
    ([-0.1], 1.0, None),
    ([0.5], 0.0, None),
    ([0.25, 0.75], 1.0, [0.0]),
])
def test_pulse_train_rejects(times, total, phases):
    with pytest.raises(InvalidArgument):
        pulse_train(times, total, phases)


def test_overlapping_finite_pulses_rejected():
    with pytest.raises(InvalidArgument):
        pulse_train([0.1, 0.101], 1.0, pulse_duration=0.01)


def test_ideal_pulses_step_the_phase():
    w = pulse_train([0.25, 0.75], 1.0)
    theta = np.asarray(accumulated_phase(w, [0.0, 0.2, 0.25, 0.5, 0.8, 1.0]))
    np.testing.assert_allclose(theta, [0, 0, math.pi, math.pi, 2 * math.pi, 2 * math.pi])


def test_finite_pulses_ramp_over_their_width():
    w = pulse_train([0.5], 1.0, pulse_duration=0.1)
    theta = np.asarray(accumulated_phase(w, [0.44, 0.5, 0.56]))
    np.testing.assert_allclose(theta, [0.0, math.pi / 2, math.pi], atol=1e-12)
    assert max_rabi_frequency(w) == pytest.approx(0.5 / 0.1)


def test_constant_drive_phase_is_linear():
    w = constant_drive(40.0)
    t = np.linspace(0, 0.3, 7)
    np.testing.assert_allclose(np.asarray(accumulated_phase(w, t)), 2 * math.pi * 40.0 * t)
    assert w.phase == pytest.approx(math.pi / 2)


def test_sideband_phase_matches_envelope():
    w = sideband_drive(200.0, 0.4, 30.0, total_time=1.0)
    t = np.linspace(0.01, 0.99, 50)
    h = 1e-6
    derivative = (np.asarray(accumulated_phase(w, t + h)) - np.asarray(accumulated_phase(w, t - h))) / (2 * h)
    np.testing.assert_allclose(derivative, np.asarray(rabi_envelope(w, t)), rtol=1e-6)
    assert max_rabi_frequency(w) == pytest.approx(200.0 + 0.4 * 30.0)


def test_sampled_area_is_trapezoid():
    w = sampled([0.0, 0.1, 0.2], [0.0, 10.0, 0.0])
    assert float(accumulated_phase(w, 0.2)) == pytest.approx(1.0)
    assert float(accumulated_phase(w, 0.1)) == pytest.approx(0.5)
    assert float(rabi_envelope(w, 0.05)) == pytest.approx(5.0)


def test_sampled_rejects_bad_grid():
    with pytest.raises(InvalidArgument):
        sampled([0.0, 0.0, 0.1], [1.0, 1.0, 1.0])
    with pytest.raises(InvalidArgument):
        sampled([0.0], [1.0])


def test_time_beyond_window_rejected():
    w = pulse_train([0.5], 1.0)
    with pytest.raises(InvalidArgument):
        accumulated_phase(w, 1.5)


def test_finite_pulse_waveform_keeps_pulse_area():
    train = pulse_train([0.25, 0.5, 0.75], 1.0)
    w = finite_pulse_waveform(train, pulse_duration=0.01)
    theta = np.asarray(accumulated_phase(w, [0.3, 0.6, 1.0]))
    np.testing.assert_allclose(theta, [math.pi, 2 * math.pi, 3 * math.pi], rtol=1e-12)


def test_finite_pulse_must_fit_window():
    with pytest.raises(InvalidArgument):
        finite_pulse_waveform(pulse_train([0.001], 1.0), pulse_duration=0.01)


def test_describe_names_the_variant():
    assert describe(constant_drive(12.0)).startswith("ConstantDrive")
    assert "n=2" in describe(pulse_train([0.25, 0.75], 1.0))


@pytest.mark.parametrize("kwargs", [dict(observation_time=0.0), dict(observation_time=1.0, alpha=0.0),
                                    dict(observation_time=1.0, alpha=1.5),
                                    dict(observation_time=1.0, t1_time=-1.0)])
def test_experiment_config_validation(kwargs):
    with pytest.raises(InvalidArgument):
        experiment_config(**kwargs)
