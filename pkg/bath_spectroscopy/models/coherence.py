import logging
from typing import Optional
from collections import namedtuple

import numpy as np

from ..errors import InsufficientData, InvalidArgument
from .configs import config as model_config

logger = logging.getLogger(__name__)

CoherenceCurve = namedtuple("CoherenceCurve", ["times", "values", "stderr", "fit"],
                            defaults=(None,))

DecayFit = namedtuple("DecayFit",
                      ["rate", "rate_error", "chi2_dof", "nonexponential", "n_points"])


def coherence_curve_from(times, values, stderr=None) -> CoherenceCurve:
    times = np.asarray(times, dtype=float).reshape(-1)
    values = np.asarray(values, dtype=float).reshape(-1)
    stderr = (np.zeros_like(values) if stderr is None else
              np.asarray(stderr, dtype=float).reshape(-1))
    if not (times.shape == values.shape == stderr.shape):
        raise InvalidArgument("times, values and stderr must have equal lengths")
    return CoherenceCurve(times, values, stderr, None)


def fit_decay_rate(curve: CoherenceCurve,
                   min_points: int = model_config["fit"]["min_points"],
                   chi2_threshold: float = model_config["fit"]["nonexponential_chi2"],
                   curvature_fraction: float = model_config["fit"]["curvature_fraction"]) -> DecayFit:
    """Weighted least squares of ln C against t.

    Points with C <= 0 are dropped. The weight of each point is C/stderr (the
    inverse error of ln C); if no point carries an error the fit is unweighted
    and the rate error comes from the residual scatter.

    A weighted fit is nonexponential when chi2/dof exceeds chi2_threshold. An
    unweighted one has no error scale, so it is nonexponential when a quadratic
    term in ln C is significant (above 3 standard errors) and bends ln C by more
    than curvature_fraction of its total drop over the sampled times.

    Raises:
        InsufficientData: fewer than min_points usable points.
    """
    t = np.asarray(curve.times, dtype=float)
    c = np.asarray(curve.values, dtype=float)
    err = np.asarray(curve.stderr, dtype=float) if curve.stderr is not None else np.zeros_like(c)

    usable = c > 0
    if np.count_nonzero(usable) < min_points:
        raise InsufficientData(f"Need >= {min_points} positive coherence values, got "
                               f"{np.count_nonzero(usable)}")
    t, c, err = t[usable], c[usable], err[usable]
    y = np.log(c)

    weighted = bool(np.all(err > 0))
    if not weighted and np.any(err > 0):
        # Mixed zero and nonzero errors; floor the zeros at the smallest nonzero one.
        err = np.where(err > 0, err, np.min(err[err > 0]))
        weighted = True
    sigma_y = err / c if weighted else np.ones_like(c)

    coeffs, cov = np.polyfit(t, y, 1, w=1 / sigma_y, cov="unscaled")
    residuals = (y - np.polyval(coeffs, t)) / sigma_y
    dof = t.size - 2
    chi2_dof = float(np.sum(residuals**2) / dof) if dof > 0 else 0.0
    if not weighted and dof > 0:
        cov = cov * chi2_dof

    if weighted:
        nonexponential = chi2_dof > chi2_threshold
    else:
        nonexponential = _curved(t, y, curvature_fraction)
    if nonexponential:
        logger.warning("Decay is not a single exponential: chi2/dof = %.2f", chi2_dof)
    return DecayFit(float(-coeffs[0]), float(np.sqrt(cov[0, 0])), chi2_dof,
                    bool(nonexponential), int(t.size))


def _curved(t, y, curvature_fraction: float) -> bool:
    if t.size < 4:
        return False
    coeffs, cov = np.polyfit(t, y, 2, cov="unscaled")
    scatter = np.sum((y - np.polyval(coeffs, t))**2) / (t.size - 3)
    bend = abs(coeffs[0]) * np.ptp(t)**2
    significant = abs(coeffs[0]) > 3 * np.sqrt(cov[0, 0] * scatter)
    return bool(significant and bend > max(curvature_fraction * np.ptp(y), 1e-9))


def with_fit(curve: CoherenceCurve, **kwargs) -> CoherenceCurve:
    return curve._replace(fit=fit_decay_rate(curve, **kwargs))


def kubo_coherence(t, sigma: float, tau_c: float):
    """Coherence of free evolution under Gaussian noise with correlation
    sigma^2 exp(-|tau|/tau_c): exp(-sigma^2 tau_c^2 (t/tau_c - 1 + exp(-t/tau_c)))."""
    x = np.asarray(t, dtype=float) / tau_c
    return np.exp(-sigma**2 * tau_c**2 * (x - 1 + np.exp(-x)))


def static_coherence(t, sigma: float):
    """Free evolution under a static Gaussian spread of detunings."""
    t = np.asarray(t, dtype=float)
    return np.exp(-sigma**2 * t**2 / 2)


def t1_envelope(t, t1: Optional[float]):
    """exp(-2 t / T1); 1 when T1 is absent."""
    t = np.asarray(t, dtype=float)
    if t1 is None:
        return np.ones_like(t)
    if t1 <= 0:
        raise InvalidArgument("T1 must be positive")
    return np.exp(-2 * t / t1)
