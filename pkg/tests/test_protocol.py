import numpy as np
import pytest

from bath_spectroscopy.errors import InsufficientData, InvalidArgument, PreconditionViolation
from bath_spectroscopy.datasets.synthetic import ou_ensemble, ou_spectrum, zero_ensemble
from bath_spectroscopy.models.coherence import coherence_curve_from
from bath_spectroscopy.models.overlap import evaluate_spectrum
from bath_spectroscopy.spectroscopy import protocol
from bath_spectroscopy.spectroscopy.envelope import EnvelopeEstimate
from bath_spectroscopy.spectroscopy.protocol import measure_point, measure_bias, measure_spectrum

DURATIONS = [0.1, 0.2, 0.3]


def test_measure_spectrum_preconditions(small_ou):
    with pytest.raises(InvalidArgument):
        measure_spectrum(small_ou, [100.0], [0.1, 0.2])
    with pytest.raises(InvalidArgument):
        measure_spectrum(small_ou, [], DURATIONS)
    with pytest.raises(PreconditionViolation):
        measure_spectrum(small_ou, [20.0, 100.0], DURATIONS)


def test_bias_run_sees_population_decay():
    point = measure_bias(1e-3, DURATIONS, point_index=0, n_samples=200, seed=1, t1=2.0)
    assert point.rabi_frequency is None
    np.testing.assert_allclose(point.true_coherence, np.exp(-np.array(DURATIONS)), rtol=1e-9)
    assert point.fit.rate == pytest.approx(1.0, abs=0.4)
    assert len(point.scans) == 3


def test_quiet_bath_gives_no_decay():
    point = measure_point(zero_ensemble(1e-3, 300, 4), 100.0, DURATIONS, n_samples=200, seed=2)
    np.testing.assert_allclose(point.true_coherence, 1.0, atol=1e-9)
    assert np.all(point.lower <= point.coherence)
    assert np.all(point.coherence <= point.upper)
    assert abs(point.fit.rate) < 0.4


def test_points_use_their_own_scan_streams():
    ens = zero_ensemble(1e-3, 300)
    first = measure_point(ens, 100.0, DURATIONS, point_index=0, seed=3)
    second = measure_point(ens, 100.0, DURATIONS, point_index=1, seed=3)
    again = measure_point(ens, 100.0, DURATIONS, point_index=0, seed=3)
    assert not np.array_equal(first.scans[0].samples, second.scans[0].samples)
    np.testing.assert_array_equal(first.scans[0].samples, again.scans[0].samples)


def test_spectrum_points_and_bias_are_returned(small_ou):
    spectrum, points = measure_spectrum(small_ou, [150.0, 100.0], DURATIONS, seed=4,
                                        return_scans=True)
    np.testing.assert_allclose(spectrum.grid.values, [100.0, 150.0])
    assert [p.rabi_frequency for p in points] == [150.0, 100.0, None]
    assert spectrum.uncertainties.shape == (2,)
    no_bias = measure_spectrum(small_ou, [100.0, 150.0], DURATIONS, seed=4, bias_run=False)
    assert no_bias.origin == "measured"


def _collapsing_at(rabi_frequency):
    def coherence(ens, w, sample_times, **kwargs):
        t = np.asarray(sample_times, dtype=float)
        values = np.zeros_like(t) if w.rabi_frequency == rabi_frequency else np.exp(-0.5 * t)
        return coherence_curve_from(t, values)
    return coherence


def _max_envelope(samples, noise_sigma):
    c = float(np.max(samples))
    c = c if c > 0.05 else 0.0
    return EnvelopeEstimate(c, c, c + 0.01, 0.0)


def test_collapsed_point_is_left_out(small_ou, monkeypatch):
    monkeypatch.setattr(protocol, "ensemble_coherence", _collapsing_at(40.0))
    monkeypatch.setattr(protocol, "mle_envelope", _max_envelope)
    spectrum, points = measure_spectrum(small_ou, [40.0, 80.0, 120.0], [0.3, 0.5, 0.7],
                                        n_samples=2000, noise_sigma=0.0, bias_run=False,
                                        return_scans=True)
    np.testing.assert_allclose(spectrum.grid.values, [80.0, 120.0])
    assert len(points) == 3
    assert points[0].fit is None
    assert points[1].fit.rate == pytest.approx(0.5, rel=0.05)


def test_all_points_collapsed_raises(small_ou, monkeypatch):
    monkeypatch.setattr(protocol, "ensemble_coherence", _collapsing_at(40.0))
    monkeypatch.setattr(protocol, "mle_envelope", _max_envelope)
    with pytest.raises(InsufficientData):
        measure_spectrum(small_ou, [40.0], [0.3, 0.5, 0.7], noise_sigma=0.0, bias_run=False)


@pytest.mark.slow
def test_measured_spectrum_tracks_exponential_bath():
    ens = ou_ensemble(20.0, 2e-3, 1e-4, 20000, 1000, seed=5)
    rabi = [25.0, 50.0, 100.0, 150.0]
    G = measure_spectrum(ens, rabi, [1.0, 1.5, 2.0], seed=6)
    truth = np.asarray(evaluate_spectrum(ou_spectrum(20.0, 2e-3), rabi))
    close = np.abs(G.values - truth) <= 2 * G.uncertainties + 0.1 * truth
    assert np.count_nonzero(close) >= 3
