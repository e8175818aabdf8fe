import numpy as np
import pytest

from execsignal.impact_instant import ExecutionSpec, InstantModel
from execsignal.impact_transient import TransientModel
from execsignal.signal import SignalParams


@pytest.fixture
def params():
    return SignalParams(gamma=0.1, sigma=0.1, iota0=0.2)


@pytest.fixture
def spec():
    return ExecutionSpec(x0=10.0, T=10.0, P0=10.0)


@pytest.fixture
def fuel():
    return InstantModel(kappa=0.5, phi_hat=0.1, sigma_P=1.0)


@pytest.fixture
def pen():
    return InstantModel(kappa=0.5, phi_hat=0.1, sigma_P=1.0, varrho=0.5)


@pytest.fixture
def trans():
    return TransientModel(kappa=0.5, rho=1.0)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(987))
