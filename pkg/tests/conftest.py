import numpy as np
import pytest

from kinetic_gap import KernelParams, build_angular, build_grid, maxwellian
from kinetic_gap.fields import DistributionField, maxwellian_array


@pytest.fixture(scope="session")
def kp():
    return KernelParams(gamma=1.0, s=0.5, b0=0.3, theta_min=0.05)


@pytest.fixture(scope="session")
def grid8():
    return build_grid(8.0, 8)


@pytest.fixture(scope="session")
def grid12():
    return build_grid(8.0, 12)


@pytest.fixture(scope="session")
def aq_small(kp):
    return build_angular(kp, n_theta=5, n_phi=6, nodes_per_panel=2)


@pytest.fixture(scope="session")
def aq_fine(kp):
    return build_angular(kp, n_theta=8, n_phi=8, nodes_per_panel=3)


@pytest.fixture(scope="session")
def mu8(grid8):
    return maxwellian(grid8)


@pytest.fixture(scope="session")
def smooth8(grid8):
    vx, vy, vz = grid8.nodes
    mu3 = maxwellian_array(grid8)
    arr = (0.3 + 0.1 * vx - 0.05 * vy * vz + 0.02 * vx ** 2) * mu3
    return DistributionField(grid8, {(0, 0, 0): arr.astype(complex)})


def make_field(grid, fn):
    vx, vy, vz = grid.nodes
    mu3 = maxwellian_array(grid)
    return DistributionField(grid, {(0, 0, 0): fn(vx, vy, vz, mu3).astype(complex)})
