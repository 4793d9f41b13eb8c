import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sptmbqc import mbqc, mps

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# seed with a well-conditioned pair (x, y); see the decision log
GENERIC_SEED = 8


@pytest.fixture(scope="session")
def aklt():
    return mps.aklt_tensor()


@pytest.fixture(scope="session")
def aklt_nu(aklt):
    return mbqc.calibrate_nu(aklt)


@pytest.fixture(scope="session")
def haldane():
    return mps.haldane_tensor(2, GENERIC_SEED)


@pytest.fixture(scope="session")
def haldane_nu(haldane):
    return mbqc.calibrate_nu(haldane)


@pytest.fixture
def plus():
    return np.array([1, 1], dtype=complex) / math.sqrt(2)


@pytest.fixture
def psi():
    return np.array([1, np.exp(0.3j)], dtype=complex) / math.sqrt(2)


def random_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = z @ z.conj().T
    return rho / np.trace(rho)
