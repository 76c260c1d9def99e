import os

import numpy as np
import pytest

from kleinsim.kernel.analytic import IonParams
from kleinsim.kernel.dirac import DiracParams, LinearPotential
from kleinsim.kernel.grid import Grid
from kleinsim.utils.units import kilohertz_to_angular

SCENARIOS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'scenarios')

# c = 2*eta*Omega_tilde1 and mc2 = Omega1 for Omega_tilde1 = 2pi*17.5 kHz, Omega1 = 2pi*1.3 kHz
SPEED_OF_LIGHT = 2.0*0.044*kilohertz_to_angular(17.5)

REST_ENERGY = kilohertz_to_angular(1.3)


def pytest_collection_modifyitems(session, config, items):
    # the oracle cases fix the conventions the other suites rely on
    items.sort(key=lambda item: 0 if item.nodeid.split('::')[0].endswith('test_oracle.py') else 1)


@pytest.fixture
def scenario_file():

    def _path(name):
        return os.path.join(SCENARIOS_DIR, '{}.cfg'.format(name))

    return _path


@pytest.fixture
def small_grid():

    return Grid(512, -32.0, 32.0)


@pytest.fixture
def free_params():

    return DiracParams(c=SPEED_OF_LIGHT, mc2=REST_ENERGY)


@pytest.fixture
def linear_params():

    return DiracParams(c=SPEED_OF_LIGHT, mc2=REST_ENERGY, potential=LinearPotential(g=0.044*kilohertz_to_angular(50.0)))


@pytest.fixture
def desk_ion():

    return IonParams.from_kilohertz(omega_tilde1=17.5, omega1=1.3, omega_tilde2=22.0, fock_cutoff=30)


@pytest.fixture
def rng():

    return np.random.default_rng(20)
