import numpy as np
import pytest

from palmdpp import (BergmanClassical, Domain, FockGaussian, build_kernel)


@pytest.fixture(scope="session")
def fock16():
    return build_kernel(Domain.PLANE, FockGaussian(), 16)


@pytest.fixture(scope="session")
def fock32():
    return build_kernel(Domain.PLANE, FockGaussian(), 32)


@pytest.fixture(scope="session")
def fock64():
    return build_kernel(Domain.PLANE, FockGaussian(), 64)


@pytest.fixture(scope="session")
def disc16():
    return build_kernel(Domain.DISC, BergmanClassical(0.0), 16)


@pytest.fixture(scope="session")
def disc64():
    return build_kernel(Domain.DISC, BergmanClassical(0.0), 64)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=[424242, 0]))
