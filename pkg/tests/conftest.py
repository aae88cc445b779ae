"""Shared low-resolution fixtures"""

import numpy as np
import pytest

from horizonlab.core.config import settings
from horizonlab.services.sphere_field import ScalarField, get_grid

TEST_BANDLIMIT = 12
TEST_TIME_NODES = 16


@pytest.fixture(autouse=True)
def small_settings(monkeypatch):
    """Keep every test on a coarse resolution and a fixed seed"""
    monkeypatch.setattr(settings, "bandlimit", TEST_BANDLIMIT)
    monkeypatch.setattr(settings, "n_time", TEST_TIME_NODES)
    monkeypatch.setattr(settings, "seed", 1234)
    monkeypatch.setattr(settings, "num_threads", 1)


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="module")
def zonal_grid():
    return get_grid(TEST_BANDLIMIT, zonal=True)


@pytest.fixture(scope="module")
def full_grid():
    return get_grid(TEST_BANDLIMIT)


@pytest.fixture(scope="module")
def round_w(zonal_grid):
    return ScalarField.constant(zonal_grid, 0.0)


@pytest.fixture(scope="module")
def cos_w(zonal_grid):
    """w = 0.5 cos(theta): axisymmetric, in M+"""
    return ScalarField.from_function(zonal_grid, lambda theta, phi: 0.5 * np.cos(theta))
