import math

import numpy as np
import pytest
from scipy import stats

from bath_spectroscopy.errors import InvalidArgument, PreconditionViolation
from bath_spectroscopy.datasets.ensemble import spectrum_from_traces
from bath_spectroscopy.datasets.trap.configs import config as trap_config_table
from bath_spectroscopy.datasets.trap.collisions import (collision_config, collision_rate,
                                                        step_probability, mean_relative_speed)
from bath_spectroscopy.datasets.trap.dynamics import (simulate_atoms, simulate_trajectories,
                                                      trajectory, default_dt,
                                                      collisional_narrowing_scan)
from bath_spectroscopy.datasets.trap.potentials import (CrossedGaussian, trap_config,
                                                        trap_frequencies, trap_depth,
                                                        equilibrium_position, light_potential_fn,
                                                        sample_initial_conditions,
                                                        kinetic_temperature)
from bath_spectroscopy.models.filters import uniform_grid

K_B = trap_config_table["k_B"]


@pytest.fixture(scope="module")
def harmonic():
    return trap_config(600.0, 160.0, 7e-6)


@pytest.fixture(scope="module")
def crossed():
    beams = CrossedGaussian(50e-6, 4.0, 1064e-9, math.pi / 2)
    return trap_config(potential_shape="CrossedGaussian", beams=beams, temperature=7e-6)


def test_trap_config_validation():
    with pytest.raises(InvalidArgument):
        trap_config(600.0, -1.0)
    with pytest.raises(InvalidArgument):
        trap_config(600.0, 160.0, temperature=0.0)
    with pytest.raises(InvalidArgument):
        trap_config(600.0, 160.0, potential_shape="Box")
    with pytest.raises(InvalidArgument):
        trap_config(potential_shape="CrossedGaussian")
    with pytest.raises(InvalidArgument):
        trap_config(potential_shape="CrossedGaussian", gravity=True,
                    beams=CrossedGaussian(50e-6, 4.0, 1064e-9, math.pi / 2))


def test_harmonic_frequencies(harmonic):
    np.testing.assert_allclose(trap_frequencies(harmonic), [160.0, 600.0, 600.0], rtol=1e-9)
    assert trap_depth(harmonic) == math.inf
    assert default_dt(harmonic) == pytest.approx(1 / 12000)


def test_gravity_sags_without_changing_frequencies():
    trap = trap_config(600.0, 160.0, gravity=True)
    sag = 9.80665 / (2 * math.pi * 160.0)**2
    np.testing.assert_allclose(np.asarray(equilibrium_position(trap)), [0.0, 0.0, -sag])
    np.testing.assert_allclose(trap_frequencies(trap), [160.0, 600.0, 600.0], rtol=1e-9)
    positions, _ = sample_initial_conditions(trap, np.arange(2000), seed=1)
    assert np.mean(positions[:, 2]) == pytest.approx(-sag, abs=2.5e-6)


def test_crossed_beam_geometry(crossed):
    freqs = trap_frequencies(crossed)
    assert freqs[0] == pytest.approx(freqs[1], rel=1e-6)
    assert freqs[2] / freqs[0] == pytest.approx(math.sqrt(2), rel=1e-3)
    assert crossed.radial_frequency == pytest.approx(freqs[2])
    assert crossed.axial_frequency == pytest.approx(freqs[0])
    assert trap_depth(crossed) / K_B > 140e-6


def test_shallow_crossed_trap_refuses_to_sample():
    beams = CrossedGaussian(50e-6, 0.5, 1064e-9, math.pi / 2)
    shallow = trap_config(potential_shape="CrossedGaussian", beams=beams, temperature=7e-6)
    with pytest.raises(PreconditionViolation):
        sample_initial_conditions(shallow, np.arange(4), seed=0)


def test_harmonic_initial_conditions_are_thermal(harmonic):
    positions, velocities = sample_initial_conditions(harmonic, np.arange(4000), seed=2)
    speed = math.sqrt(K_B * 7e-6 / harmonic.atom_mass)
    widths = speed / (2 * math.pi * np.array([600.0, 600.0, 160.0]))
    np.testing.assert_allclose(np.std(positions, axis=0), widths, rtol=0.05)
    np.testing.assert_allclose(np.std(velocities, axis=0), speed, rtol=0.05)
    assert kinetic_temperature(velocities, harmonic.atom_mass) == pytest.approx(7e-6, rel=0.05)


def test_atom_draws_do_not_depend_on_batch(harmonic, crossed):
    for trap in (harmonic, crossed):
        some = sample_initial_conditions(trap, [3, 4], seed=9)
        all_ = sample_initial_conditions(trap, np.arange(10), seed=9)
        np.testing.assert_allclose(some[0], all_[0][3:5])
        np.testing.assert_allclose(some[1], all_[1][3:5])


def test_crossed_positions_follow_boltzmann(crossed):
    positions, _ = sample_initial_conditions(crossed, np.arange(1000), seed=4)
    light = light_potential_fn(crossed)
    excess = np.asarray(light(positions)) - float(light(np.zeros(3)))
    kT = K_B * crossed.temperature
    assert np.all(excess < 10 * kT)
    assert 1.3 < np.mean(excess) / kT < 1.8


def test_harmonic_motion_conserves_energy(harmonic):
    _, _, energies = trajectory(harmonic, [1e-5, -2e-5, 3e-5], [0.01, 0.0, -0.02], 5000, 1 / 12800)
    assert np.max(np.abs(energies - energies[0])) / energies[0] < 1e-9


def test_crossed_motion_keeps_energy_bounded(crossed):
    r0 = np.array([2e-6, 0.0, 3e-6])
    _, _, energies = trajectory(crossed, r0, np.zeros(3), 4000, default_dt(crossed))
    light = light_potential_fn(crossed)
    oscillation = float(light(r0)) - float(light(np.zeros(3)))
    assert np.max(np.abs(energies - energies[0])) < 0.05 * oscillation


def test_coarse_step_is_rejected(harmonic):
    with pytest.raises(PreconditionViolation):
        simulate_trajectories(harmonic, collision_config(0.0), 2, 0.01, dt=1e-4)
    with pytest.raises(InvalidArgument):
        simulate_trajectories(harmonic, collision_config(0.0), 0, 0.01)


def test_axial_oscillation_repeats_at_twice_the_frequency(harmonic):
    dt = 1 / 12800
    state = (np.array([[0.0, 0.0, 1e-6]]), np.zeros((1, 3)))
    ens = simulate_trajectories(harmonic, collision_config(0.0), 1, 400 * dt, dt,
                                initial_state=state)
    delta = ens.traces[0]
    assert delta.size == 400
    np.testing.assert_allclose(delta[40:], delta[:-40], atol=1e-8 * np.max(np.abs(delta)))
    assert np.argmin(delta[:40]) == 20


def test_simulation_is_independent_of_threads(harmonic):
    coll = collision_config(100.0)
    one = simulate_trajectories(harmonic, coll, 70, 0.02, seed=5, threads=1)
    four = simulate_trajectories(harmonic, coll, 70, 0.02, seed=5, threads=4)
    np.testing.assert_array_equal(one.traces, four.traces)
    assert one.traces.shape == (70, 240)


def test_detuning_scale_and_collision_count(harmonic):
    ens, _, _, collisions = simulate_atoms(harmonic, collision_config(200.0), 200, 0.5,
                                           default_dt(harmonic), seed=6)
    kT = K_B * harmonic.temperature
    expected_std = harmonic.differential_shift_ratio * kT * math.sqrt(1.5) / trap_config_table["hbar"]
    assert np.std(ens.traces) == pytest.approx(expected_std, rel=0.1)
    assert np.mean(collisions) == pytest.approx(100.0, rel=0.05)
    assert ens.offset > 0


def test_collision_parameters(harmonic):
    with pytest.raises(InvalidArgument):
        collision_config(-1.0)
    with pytest.raises(InvalidArgument):
        collision_config(1.0, model="HardSphere")
    assert step_probability(collision_config(100.0), 1e-3) == pytest.approx(1 - math.exp(-0.1))
    kT = K_B * harmonic.temperature
    assert mean_relative_speed(harmonic) == pytest.approx(
        4 * math.sqrt(kT / (math.pi * harmonic.atom_mass)))


def test_collision_rates_of_the_two_regimes(harmonic):
    weak = trap_config_table["experiments"]["weak_coupling"]
    strong = trap_config_table["experiments"]["strong_coupling"]
    dense = collision_rate(weak["atom_number"], harmonic)
    dilute = collision_rate(strong["atom_number"], harmonic)
    assert 1400 < dense < 1650
    assert 100 < dilute < 130
    assert dense / dilute == pytest.approx(weak["atom_number"] / strong["atom_number"])


@pytest.mark.slow
def test_final_velocities_stay_maxwellian(harmonic):
    _, _, v_final, _ = simulate_atoms(harmonic, collision_config(2000.0), 500, 0.02,
                                      default_dt(harmonic), seed=7)
    scale = math.sqrt(K_B * harmonic.temperature / harmonic.atom_mass)
    speeds = np.linalg.norm(v_final, axis=1)
    assert stats.kstest(speeds, stats.maxwell(scale=scale).cdf).pvalue > 0.01


@pytest.mark.slow
def test_motional_peak_at_twice_axial_frequency(harmonic):
    ens = simulate_trajectories(harmonic, collision_config(50.0), 200, 1.0, seed=8)
    G = spectrum_from_traces(ens, uniform_grid(1500.0, 2.0, f_min=10.0))
    f, values = np.asarray(G.grid.values), np.asarray(G.values)
    window = (f >= 200) & (f <= 500)
    peak = np.argmax(values[window])
    assert 272 <= f[window][peak] <= 368
    assert values[window][peak] > values[window][0]
    assert values[window][peak] > values[window][-1]


@pytest.mark.slow
def test_collisions_narrow_the_low_frequency_spectrum(harmonic):
    table = collisional_narrowing_scan(harmonic, [100.0, 400.0], 200, 1.0, seed=9)
    (_, slow), (_, fast) = table
    assert fast < slow
