import os

import pytest

from bath_spectroscopy.datasets.synthetic import ou_ensemble, ou_spectrum
from bath_spectroscopy.models.filters import uniform_grid

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


@pytest.fixture(scope="session")
def config_dir():
    return CONFIG_DIR


@pytest.fixture
def fine_grid():
    return uniform_grid(200.0, 0.01)


@pytest.fixture(scope="session")
def small_ou():
    """A cheap exponential-correlation ensemble: sigma 20 rad/s, tau_c 2 ms."""
    return ou_ensemble(20.0, 2e-3, 1e-4, 4000, 128, seed=3)


@pytest.fixture(scope="session")
def small_ou_spectrum():
    return ou_spectrum(20.0, 2e-3)
