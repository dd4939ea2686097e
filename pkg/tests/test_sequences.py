import math

import numpy as np
import pytest

from bath_spectroscopy.errors import InvalidArgument
from bath_spectroscopy.models.sequences import (hahn_times, cpmg_times, udd_times, cdd_times,
                                                cdd_pulse_count, admissible_cdd_counts,
                                                assign_phases, sequence_spec, sequence_times,
                                                sequence_waveform, with_total_time,
                                                sequence_to_dict, sequence_from_dict)


def test_cpmg_spacing():
    np.testing.assert_allclose(cpmg_times(4, 1.0), [0.125, 0.375, 0.625, 0.875])


@pytest.mark.parametrize("n, T", [(1, 1.0), (4, 2.0), (7, 0.3), (16, 1.0)])
def test_cpmg_symmetric_about_midpoint(n, T):
    times = np.array(cpmg_times(n, T))
    np.testing.assert_allclose(times + times[::-1], T, rtol=1e-12)
    np.testing.assert_allclose(np.diff(times), T / n, rtol=1e-9)


def test_hahn_is_single_mid_pulse():
    assert hahn_times(2.0) == [1.0]
    np.testing.assert_allclose(udd_times(1, 2.0), hahn_times(2.0))
    np.testing.assert_allclose(cpmg_times(1, 2.0), hahn_times(2.0))


def test_udd_positions():
    n, T = 5, 1.0
    expected = [T * math.sin(math.pi * j / 12)**2 for j in range(1, 6)]
    np.testing.assert_allclose(udd_times(n, T), expected)
    # symmetric about T/2
    np.testing.assert_allclose(np.array(udd_times(n, T)) + np.array(udd_times(n, T))[::-1], T)


def test_cdd_first_order():
    np.testing.assert_allclose(cdd_times(1, 1.0), [0.25, 0.75])


@pytest.mark.parametrize("order, count", [(1, 2), (2, 5), (3, 10), (4, 21), (5, 42)])
def test_cdd_counts(order, count):
    assert cdd_pulse_count(order) == count
    assert len(cdd_times(order, 1.0)) == count


def test_admissible_cdd_counts():
    counts = admissible_cdd_counts(64, 2)
    assert [c for _, c in counts] == [2, 5, 10, 21, 42]
    assert admissible_cdd_counts(64, 4)[0] == (2, 5)


@pytest.mark.parametrize("n", [0, -1, 2.5])
def test_bad_counts_rejected(n):
    with pytest.raises(InvalidArgument):
        cpmg_times(n, 1.0)


def test_alternate_pair_phases():
    assert assign_phases([0.1] * 6, "AlternatePairs") == [0, 0, math.pi, math.pi, 0, 0]
    with pytest.raises(InvalidArgument):
        assign_phases([0.1], "Random")


def test_sequence_spec_dispatch():
    spec = sequence_spec("CDD", 1.0, cdd_order=2)
    assert spec.n_pulses == 5
    assert len(sequence_times(spec)) == 5
    assert sequence_spec("Hahn", 1.0).n_pulses == 1
    with pytest.raises(InvalidArgument):
        sequence_spec("XY8", 1.0, n_pulses=8)
    with pytest.raises(InvalidArgument):
        sequence_spec("CPMG", 1.0)


def test_sequence_waveform_and_rescaling():
    spec = sequence_spec("CPMG", 1.0, n_pulses=4, phase_pattern="AlternatePairs")
    w = sequence_waveform(spec)
    np.testing.assert_allclose(w.pulse_phases, [0, 0, math.pi, math.pi])
    longer = with_total_time(spec, 2.0)
    np.testing.assert_allclose(sequence_times(longer), 2 * np.asarray(sequence_times(spec)))


def test_dict_form():
    spec = sequence_spec("CDD", 0.4, cdd_order=3)
    d = sequence_to_dict(spec)
    assert d["cdd_order"] == 3 and d["total_time_s"] == 0.4
    assert sequence_from_dict(d) == spec
    with pytest.raises(InvalidArgument):
        sequence_from_dict({"kind": "CPMG", "n_pulses": 4, "total_time_s": 1.0, "spacing": 2})
    with pytest.raises(InvalidArgument):
        sequence_from_dict({"kind": "CPMG", "n_pulses": 4})
