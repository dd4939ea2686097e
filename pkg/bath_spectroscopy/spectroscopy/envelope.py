"""Randomized-phase scans and maximum-likelihood estimation of their envelope.

A scan point records populations z_i = C sin(Phi_i) + eps_i with Phi_i uniform
on [0, 2 pi) and eps_i Gaussian readout noise. The envelope C is the Bloch
vector length; its likelihood is the arcsine law of C sin(Phi) convolved
with the readout noise.
"""
import math
import logging
from functools import partial
from typing import Optional
from collections import namedtuple

import numpy as np
import jax
import jax.numpy as jnp
from jax import random
from jax.scipy.special import logsumexp
from scipy import optimize, stats

from ..errors import InsufficientData, InsufficientVariation, InvalidArgument
from .configs import config as spectroscopy_config

logger = logging.getLogger(__name__)

_envelope = spectroscopy_config["envelope"]
_LIKELIHOOD_BUDGET = 1 << 22                    #array elements per likelihood batch

ScanPoint = namedtuple("ScanPoint", ["rabi_frequency", "duration", "samples", "n_samples"],
                       defaults=(None,))

EnvelopeEstimate = namedtuple("EnvelopeEstimate", ["c_hat", "lower", "upper", "log_likelihood"])


def _as_key(seed):
    return random.PRNGKey(seed) if isinstance(seed, (int, np.integer)) else seed


def synthesize_scan(c_true: float, n_samples: int = spectroscopy_config["samples_per_point"],
                    noise_sigma: float = spectroscopy_config["readout_noise"], seed=0,
                    rabi_frequency: Optional[float] = None,
                    duration: Optional[float] = None) -> ScanPoint:
    """Draws n_samples populations for a Bloch vector of length c_true.

    Args:
        seed: An int or a jax PRNG key.
    """
    if not 0 <= c_true <= 1:
        raise InvalidArgument("c_true must lie in [0, 1], got " + str(c_true))
    if n_samples < 1 or noise_sigma < 0:
        raise InvalidArgument("Need n_samples >= 1 and noise_sigma >= 0")
    phase_key, noise_key = random.split(_as_key(seed))
    phases = random.uniform(phase_key, (n_samples,), minval=0.0, maxval=2 * jnp.pi)
    noise = noise_sigma * random.normal(noise_key, (n_samples,))
    samples = np.asarray(c_true * jnp.sin(phases) + noise)
    return ScanPoint(rabi_frequency, duration, samples, int(n_samples))


def phase_nodes(noise_sigma: float) -> int:
    """Periodic trapezoid nodes resolving C sin(Phi) on the scale of the noise."""
    needed = _envelope["phase_nodes_per_width"] * 2 * math.pi * _envelope["c_max"] / noise_sigma
    return int(min(_envelope["max_phase_nodes"], max(_envelope["min_phase_nodes"], math.ceil(needed))))


@partial(jax.jit, static_argnums=(3,))
def _log_likelihood(c_values, samples, noise_sigma, n_nodes: int):
    sin_phi = jnp.sin(2 * jnp.pi * jnp.arange(n_nodes) / n_nodes)
    residual = samples[None, :, None] - c_values[:, None, None] * sin_phi[None, None, :]
    log_density = (logsumexp(-residual**2 / (2 * noise_sigma**2), axis=-1) - jnp.log(n_nodes)
                   - 0.5 * jnp.log(2 * jnp.pi * noise_sigma**2))
    return jnp.sum(log_density, axis=-1)


def envelope_log_likelihood(c, samples, noise_sigma: float):
    """log L(C) = sum_i log (1/2pi) int N(z_i - C sin Phi; sigma) dPhi, for scalar or array C."""
    if noise_sigma <= 0:
        raise InvalidArgument("The likelihood needs noise_sigma > 0")
    c = np.asarray(c, dtype=float)
    flat = c.reshape(-1)
    samples = jnp.asarray(samples, dtype=float).reshape(-1)
    n_nodes = phase_nodes(noise_sigma)
    chunk = max(1, _LIKELIHOOD_BUDGET // (samples.size * n_nodes))
    padded = np.pad(flat, (0, (-flat.size) % chunk), mode="edge")
    values = [np.asarray(_log_likelihood(jnp.asarray(padded[start:start + chunk]), samples,
                                         float(noise_sigma), n_nodes))
              for start in range(0, padded.size, chunk)]
    return np.concatenate(values)[:flat.size].reshape(c.shape)


def _check_samples(samples) -> np.ndarray:
    samples = np.asarray(samples, dtype=float).reshape(-1)
    if samples.size < spectroscopy_config["min_samples"]:
        raise InsufficientData("Need >= %d samples for the envelope, got %d"
                               % (spectroscopy_config["min_samples"], samples.size))
    if np.ptp(samples) == 0:
        raise InsufficientVariation("All samples are equal; the envelope is undetermined")
    return samples


def mle_envelope(samples, noise_sigma: float = spectroscopy_config["readout_noise"],
                 c_max: float = _envelope["c_max"]) -> EnvelopeEstimate:
    """Maximum-likelihood envelope with its profile-likelihood interval.

    A grid over [0, c_max] locates the maximum, which a bounded Brent search
    (golden section with parabolic steps) refines. The interval is where
    log L stays within chi2_1(68.27%)/2 of the maximum, clipped to [0, c_max].
    Without noise the estimate is max |z| and the upper bound the value of C
    for which max |z| would fall that low with probability 0.16.

    Raises:
        InsufficientData: fewer than 10 samples.
        InsufficientVariation: all samples equal.
    """
    samples = _check_samples(samples)
    if noise_sigma < 0:
        raise InvalidArgument("noise_sigma must be non-negative")

    if noise_sigma == 0:
        c_hat = float(np.max(np.abs(samples)))
        upper = c_hat / math.sin(math.pi / 2 * 0.16**(1 / samples.size))
        return EnvelopeEstimate(c_hat, c_hat, upper, math.inf)

    def log_l(c):
        return float(envelope_log_likelihood(c, samples, noise_sigma))

    grid = np.linspace(0.0, c_max, _envelope["grid_points"])
    values = envelope_log_likelihood(grid, samples, noise_sigma)
    best = int(np.argmax(values))
    lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, grid.size - 1)]
    result = optimize.minimize_scalar(lambda c: -log_l(c), bounds=(lo, hi), method="bounded",
                                      options={"xatol": 1e-8})
    c_hat, log_max = float(result.x), -float(result.fun)
    if values[best] > log_max:
        c_hat, log_max = float(grid[best]), float(values[best])

    drop = stats.chi2.ppf(_envelope["confidence_level"], 1) / 2

    def excess(c):
        return log_l(c) - (log_max - drop)

    lower = 0.0 if excess(0.0) >= 0 or c_hat == 0 else optimize.brentq(excess, 0.0, c_hat)
    upper = c_max if excess(c_max) >= 0 or c_hat == c_max else optimize.brentq(excess, c_hat, c_max)
    logger.debug("mle_envelope: C = %.4f [%.4f, %.4f] from %d samples",
                 c_hat, lower, upper, samples.size)
    return EnvelopeEstimate(c_hat, float(lower), float(upper), log_max)
