"""Dynamical-decoupling pulse placements.

CPMG puts pulse j at (j - 1/2) T/n, so the first and last free intervals are
half the inner spacing. UDD puts pulse j at T sin^2(pi j / (2n + 2)). CDD of
order k concatenates k + 1 levels of the free-evolution sign pattern
s_1 = [+, -], s_j = s_{j-1} ++ (-s_{j-1}) over 2^{k+1} equal cells and places a
pulse wherever the sign flips; back-to-back pulse pairs cancel, and a pulse at
T is dropped, so order k has floor(2^{k+2}/3) pulses: 2, 5, 10, 21, 42, 85, ...
"""
import math
from typing import List, Dict
from collections import namedtuple

import numpy as np

from ..errors import InvalidArgument
from .waveforms import pulse_train, PulseTrain

SEQUENCE_KINDS = ("Hahn", "CPMG", "UDD", "CDD")
PHASE_PATTERNS = ("Uniform", "AlternatePairs")

SequenceSpec = namedtuple(
    "SequenceSpec",
    ["kind", "n_pulses", "cdd_order", "total_time", "phase_pattern"],
    defaults=("Uniform",),
)


def _check_count_and_time(n: int, T: float, what: str = "n"):
    if int(n) != n or n < 1:
        raise InvalidArgument(what + " must be an integer >= 1, got " + str(n))
    if T <= 0:
        raise InvalidArgument("Total time T must be positive, got " + str(T))


def hahn_times(T: float) -> List[float]:
    _check_count_and_time(1, T)
    return [T / 2]


def cpmg_times(n: int, T: float) -> List[float]:
    _check_count_and_time(n, T)
    return [(j - 0.5) * T / n for j in range(1, n + 1)]


def udd_times(n: int, T: float) -> List[float]:
    _check_count_and_time(n, T)
    return [T * math.sin(math.pi * j / (2 * n + 2))**2 for j in range(1, n + 1)]


def cdd_sign_pattern(order: int) -> np.ndarray:
    """Sign of the toggling frame over 2^(order+1) equal cells."""
    signs = np.array([1, -1])
    for _ in range(order):
        signs = np.concatenate([signs, -signs])
    return signs


def cdd_times(order: int, T: float) -> List[float]:
    _check_count_and_time(order, T, what="CDD order")
    signs = cdd_sign_pattern(order)
    n_cells = signs.size
    flips = np.nonzero(signs[1:] != signs[:-1])[0] + 1
    return [T * i / n_cells for i in flips]


def cdd_pulse_count(order: int) -> int:
    return 2**(order + 2) // 3


def admissible_cdd_counts(max_pulses: int, min_pulses: int = 1) -> List[tuple]:
    """(order, pulse count) pairs with min_pulses <= count <= max_pulses."""
    counts, order = [], 1
    while cdd_pulse_count(order) <= max_pulses:
        if cdd_pulse_count(order) >= min_pulses:
            counts.append((order, cdd_pulse_count(order)))
        order += 1
    return counts


def assign_phases(times: List[float], pattern: str = "Uniform") -> List[float]:
    """Rotation-axis phase per pulse. AlternatePairs flips the axis every two
    pulses: 0, 0, pi, pi, 0, 0, ..."""
    if pattern == "Uniform":
        return [0.0] * len(times)
    if pattern == "AlternatePairs":
        return [math.pi * ((j // 2) % 2) for j in range(len(times))]
    raise InvalidArgument("Unknown phase pattern: " + str(pattern))


def sequence_spec(kind: str,
                  total_time: float,
                  n_pulses: int = None,
                  cdd_order: int = None,
                  phase_pattern: str = "Uniform") -> SequenceSpec:
    if kind not in SEQUENCE_KINDS:
        raise InvalidArgument("Unknown sequence kind " + str(kind) + "; expected one of " +
                              ", ".join(SEQUENCE_KINDS))
    if phase_pattern not in PHASE_PATTERNS:
        raise InvalidArgument("Unknown phase pattern: " + str(phase_pattern))
    if kind == "Hahn":
        n_pulses = 1
    if kind == "CDD":
        _check_count_and_time(cdd_order if cdd_order is not None else 0, total_time,
                              what="CDD order")
        n_pulses = cdd_pulse_count(cdd_order)
    else:
        _check_count_and_time(n_pulses if n_pulses is not None else 0, total_time,
                              what="n_pulses")
    return SequenceSpec(kind, int(n_pulses), cdd_order, float(total_time), phase_pattern)


def sequence_times(spec: SequenceSpec) -> List[float]:
    if spec.kind == "Hahn":
        return hahn_times(spec.total_time)
    if spec.kind == "CPMG":
        return cpmg_times(spec.n_pulses, spec.total_time)
    if spec.kind == "UDD":
        return udd_times(spec.n_pulses, spec.total_time)
    if spec.kind == "CDD":
        return cdd_times(spec.cdd_order, spec.total_time)
    raise InvalidArgument("Unknown sequence kind: " + str(spec.kind))


def sequence_waveform(spec: SequenceSpec, pulse_duration: float = 0.0) -> PulseTrain:
    times = sequence_times(spec)
    return pulse_train(times, spec.total_time,
                       pulse_phases=assign_phases(times, spec.phase_pattern),
                       pulse_duration=pulse_duration)


def with_total_time(spec: SequenceSpec, total_time: float) -> SequenceSpec:
    return sequence_spec(spec.kind, total_time, n_pulses=spec.n_pulses,
                         cdd_order=spec.cdd_order, phase_pattern=spec.phase_pattern)


def sequence_to_dict(spec: SequenceSpec) -> Dict:
    out = {
        "kind": spec.kind,
        "n_pulses": spec.n_pulses,
        "total_time_s": spec.total_time,
        "phase_pattern": spec.phase_pattern,
    }
    if spec.kind == "CDD":
        out["cdd_order"] = spec.cdd_order
    return out


def sequence_from_dict(d) -> SequenceSpec:
    """Inverse of sequence_to_dict. Accepts any mapping (e.g. a FrozenDict)."""
    allowed = {"kind", "n_pulses", "total_time_s", "phase_pattern", "cdd_order"}
    unknown = set(d.keys()) - allowed
    if unknown:
        raise InvalidArgument("Unknown sequence keys: " + ", ".join(sorted(unknown)))
    if "kind" not in d or "total_time_s" not in d:
        raise InvalidArgument("Sequence needs 'kind' and 'total_time_s'")
    return sequence_spec(d["kind"], d["total_time_s"], n_pulses=d.get("n_pulses"),
                         cdd_order=d.get("cdd_order"),
                         phase_pattern=d.get("phase_pattern", "Uniform"))
