"""Synthetic detuning sources with known spectra.

Every atom draws from its own stream jax.random.fold_in(PRNGKey(seed), atom),
so traces do not depend on how atoms are chunked or threaded.
"""
from functools import partial
from typing import Optional

import numpy as np
import jax
import jax.numpy as jnp
from jax import random

from ...errors import InvalidArgument
from ...models.overlap import Lorentzian, lorentzian_spectrum
from ...utils.misc import run_chunked
from ..ensemble import DetuningEnsemble, make_ensemble

_CHUNK = 64


def _check(dt: float, n_steps: int, n_atoms: int):
    if dt <= 0:
        raise InvalidArgument("dt must be positive")
    if n_steps < 1 or n_atoms < 1:
        raise InvalidArgument("Need n_steps >= 1 and n_atoms >= 1")


def _atom_keys(seed: int, atoms):
    base = random.PRNGKey(seed)
    return jax.vmap(lambda i: random.fold_in(base, i))(jnp.asarray(atoms))


@partial(jax.jit, static_argnums=(0,))
def _ou_chunk(n_steps: int, a: float, b: float, sigma: float, keys):

    def one_atom(key):
        start_key, noise_key = random.split(key)
        x0 = sigma * random.normal(start_key)
        noise = b * random.normal(noise_key, shape=(n_steps - 1,))

        def step(x_prev, eps):
            x_new = a * x_prev + eps
            return x_new, x_new

        _, x = jax.lax.scan(step, x0, noise)
        """FOR-LOOP equivalent
        x = [x0]
        for eps in noise:
            x.append(a * x[-1] + eps)
        """
        return jnp.concatenate([x0[None], x])

    return jax.vmap(one_atom)(keys)


def ou_ensemble(sigma: float, tau_c: float, dt: float, n_steps: int, n_atoms: int,
                seed: int = 0, threads: Optional[int] = None) -> DetuningEnsemble:
    """Stationary Gaussian noise with autocorrelation sigma^2 exp(-|tau|/tau_c).

    Uses the exact one-step update x' = a x + b xi with a = exp(-dt/tau_c) and
    b = sigma sqrt(1 - a^2), started from the stationary distribution.
    """
    _check(dt, n_steps, n_atoms)
    if sigma < 0 or tau_c <= 0:
        raise InvalidArgument("Need sigma >= 0 and tau_c > 0")
    a = float(np.exp(-dt / tau_c))
    b = float(sigma * np.sqrt(1 - a**2))

    def kernel(atoms):
        return (_ou_chunk(n_steps, a, b, float(sigma), _atom_keys(seed, atoms)),)

    traces, = run_chunked(kernel, n_atoms, _CHUNK, threads)
    config = {"source": "exponential", "sigma": sigma, "tau_c": tau_c}
    return make_ensemble(traces, dt, seed, config)


@partial(jax.jit, static_argnums=(0, 3))
def _redraw_chunk(n_steps: int, p: float, sigma: float, signs: bool, keys):

    def draw(key):
        if signs:
            return sigma * (2.0 * random.bernoulli(key).astype(float) - 1.0)
        return sigma * random.normal(key)

    def one_atom(key):
        start_key, flip_key, value_key = random.split(key, 3)
        redraw = random.uniform(flip_key, shape=(n_steps - 1,)) < p
        values = jax.vmap(draw)(random.split(value_key, n_steps - 1))

        def step(x_prev, inputs):
            flip, value = inputs
            x_new = jnp.where(flip, value, x_prev)
            return x_new, x_new

        x0 = draw(start_key)
        _, x = jax.lax.scan(step, x0, (redraw, values))
        return jnp.concatenate([x0[None], x])

    return jax.vmap(one_atom)(keys)


def redraw_ensemble(sigma: float, rate: float, dt: float, n_steps: int, n_atoms: int,
                    seed: int = 0, signs: bool = False,
                    threads: Optional[int] = None) -> DetuningEnsemble:
    """Value redrawn at Poisson times of rate Gamma (per step with probability
    1 - exp(-Gamma dt)); Gaussian values of std sigma, or +-sigma with signs=True.
    The autocorrelation is sigma^2 exp(-Gamma |tau|) on the sampling grid."""
    _check(dt, n_steps, n_atoms)
    if sigma < 0 or rate < 0:
        raise InvalidArgument("Need sigma >= 0 and rate >= 0")
    p = float(-np.expm1(-rate * dt))

    def kernel(atoms):
        return (_redraw_chunk(n_steps, p, float(sigma), bool(signs), _atom_keys(seed, atoms)),)

    traces, = run_chunked(kernel, n_atoms, _CHUNK, threads)
    config = {"source": "redraw", "sigma": sigma, "rate": rate, "signs": bool(signs)}
    return make_ensemble(traces, dt, seed, config)


def static_ensemble(sigma: float, dt: float, n_steps: int, n_atoms: int,
                    seed: int = 0) -> DetuningEnsemble:
    """Time-independent detunings, Gaussian across atoms."""
    _check(dt, n_steps, n_atoms)
    values = sigma * np.asarray(jax.vmap(random.normal)(_atom_keys(seed, np.arange(n_atoms))))
    traces = np.repeat(values[:, None], n_steps, axis=1)
    return make_ensemble(traces, dt, seed, {"source": "static", "sigma": sigma})


def zero_ensemble(dt: float, n_steps: int, n_atoms: int = 1) -> DetuningEnsemble:
    _check(dt, n_steps, n_atoms)
    return make_ensemble(np.zeros((n_atoms, n_steps)), dt, None, {"source": "zero"})


def ou_spectrum(sigma: float, tau_c: float) -> Lorentzian:
    """G(f) = 2 sigma^2 tau_c / (1 + (2 pi f tau_c)^2)."""
    return lorentzian_spectrum(2 * sigma**2 * tau_c, 1 / (2 * np.pi * tau_c))


def redraw_spectrum(sigma: float, rate: float) -> Lorentzian:
    return ou_spectrum(sigma, 1.0 / rate)
