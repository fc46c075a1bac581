"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from ier_spectra.kernels import Kernel, WeightModel


@pytest.fixture
def const_kernel():
    return Kernel.constant(1.0)


@pytest.fixture
def point_mass():
    return WeightModel.discrete([1.0], [1.0])


@pytest.fixture
def two_atoms():
    return WeightModel.discrete([0.5, 1.5], [0.5, 0.5])


@pytest.fixture
def rank1_identity():
    return Kernel.rank1(lambda x: x, r_bound=1.5, r_lipschitz=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
