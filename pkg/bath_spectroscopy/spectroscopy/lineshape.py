"""Rabi lineshape fits and the quadratic dressing-shift calibration."""
import math
import logging
from typing import Optional, Sequence, Tuple
from collections import namedtuple

import numpy as np
import jax.numpy as jnp
from jax import random
from scipy.optimize import curve_fit

from ..errors import InsufficientData, InvalidArgument
from .configs import config as spectroscopy_config

logger = logging.getLogger(__name__)

RabiLineshapeFit = namedtuple(
    "RabiLineshapeFit",
    ["f0_shift", "amplitude", "phase", "duration", "covariance", "chi2_dof"],
)

DressingFit = namedtuple("DressingFit", ["kappa", "kappa_error", "chi2_dof", "n_points"])


def rabi_lineshape(f, f0, A, phi, T):
    """A f^2 / ((f - f0)^2 + f^2) [1 + cos(phi + T sqrt((f - f0)^2 + f^2))]."""
    f = jnp.asarray(f, dtype=float)
    generalized_sq = (f - f0)**2 + f**2
    return A * f**2 / generalized_sq * (1 + jnp.cos(phi + T * jnp.sqrt(generalized_sq)))


def synthesize_lineshape(f, f0_shift: float, A: float, phi: float, T: float,
                         noise: float = 0.0, seed: int = 0) -> np.ndarray:
    """rabi_lineshape plus Gaussian noise of std `noise`."""
    f = np.asarray(f, dtype=float)
    clean = np.asarray(rabi_lineshape(f, f0_shift, A, phi, T))
    return clean + noise * np.asarray(random.normal(random.PRNGKey(seed), f.shape))


def _linear_profile(f, population, f0, T, weights):
    """Best (A, A cos phi, -A sin phi) at fixed f0 by linear least squares.
    Returns (residual sum of squares, coefficients)."""
    generalized_sq = (f - f0)**2 + f**2
    envelope = f**2 / generalized_sq
    argument = T * np.sqrt(generalized_sq)
    design = np.stack([envelope, envelope * np.cos(argument), envelope * np.sin(argument)], axis=1)
    coeffs, _, _, _ = np.linalg.lstsq(design * weights[:, None], population * weights, rcond=None)
    residual = (design @ coeffs - population) * weights
    return float(np.sum(residual**2)), coeffs


def fit_rabi_lineshape(f: Sequence[float], population: Sequence[float], duration: float,
                       f0_grid: Optional[Sequence[float]] = None,
                       sigma: Optional[Sequence[float]] = None) -> RabiLineshapeFit:
    """Fits (f0, A, phi) of rabi_lineshape at the known pulse duration.

    The residual is profiled over f0_grid (default: the scanned range), solving
    the model linearly in (A, A cos phi, -A sin phi) at every f0; the best
    grid point seeds a nonlinear least-squares fit.
    """
    f = np.asarray(f, dtype=float).reshape(-1)
    population = np.asarray(population, dtype=float).reshape(-1)
    if f.shape != population.shape or f.size < 4:
        raise InsufficientData("Need >= 4 (f, population) pairs of equal length")
    if duration <= 0:
        raise InvalidArgument("duration must be positive")
    weights = np.ones_like(f) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)
    if f0_grid is None:
        f0_grid = np.linspace(f.min(), f.max(), spectroscopy_config["lineshape"]["f0_grid_points"])

    profile = [_linear_profile(f, population, f0, duration, weights) for f0 in f0_grid]
    best = int(np.argmin([rss for rss, _ in profile]))
    a, b, c = profile[best][1]
    p0 = (float(f0_grid[best]), float(np.hypot(b, c)), float(math.atan2(-c, b)))

    model = lambda x, f0, A, phi: np.asarray(rabi_lineshape(x, f0, A, phi, duration))
    params, cov = curve_fit(model, f, population, p0=p0,
                            sigma=None if sigma is None else np.asarray(sigma, dtype=float),
                            absolute_sigma=sigma is not None)
    residual = (model(f, *params) - population) * weights
    dof = max(f.size - 3, 1)
    phase = float(np.angle(np.exp(1j * params[2])))
    return RabiLineshapeFit(float(params[0]), float(params[1]), phase, float(duration), cov,
                            float(np.sum(residual**2) / dof))


def dressing_calibration(points: Sequence[Tuple[float, float]]) -> DressingFit:
    """Least-squares shift = kappa f_R^2 through (Rabi frequency [Hz], shift [Hz]) pairs.

    Raises:
        InsufficientData: fewer than three distinct Rabi frequencies.
    """
    table = np.asarray(points, dtype=float).reshape(-1, 2)
    rabi, shift = table[:, 0], table[:, 1]
    if np.unique(rabi).size < spectroscopy_config["dressing"]["min_points"]:
        raise InsufficientData("Need >= %d distinct Rabi frequencies, got %d"
                               % (spectroscopy_config["dressing"]["min_points"], np.unique(rabi).size))
    x = rabi**2
    kappa = float(np.sum(x * shift) / np.sum(x**2))
    dof = rabi.size - 1
    chi2_dof = float(np.sum((shift - kappa * x)**2) / dof)
    kappa_error = math.sqrt(chi2_dof / np.sum(x**2))
    logger.info("Dressing shift: kappa = %.4g +- %.2g Hz^-1 from %d points", kappa, kappa_error, rabi.size)
    return DressingFit(kappa, kappa_error, chi2_dof, int(rabi.size))


def dressing_shift(kappa: float, rabi_frequency):
    """Clock shift in Hz at Rabi frequency f_R: kappa f_R^2."""
    return kappa * np.asarray(rabi_frequency, dtype=float)**2
