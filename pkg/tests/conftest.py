import warnings

import numpy as np
import pytest

from nodal_lane_emden.exponents import hyperbola_complete
from nodal_lane_emden.solver import SolveConfig, ground_state_radial, minimize_equivariant
from nodal_lane_emden.symmetry import SymmetrySpec

YAMABE_LEVEL_N4 = 16 * np.pi**2 / 3       # scripts/bubble_oracles.py
PANEITZ_LEVEL_N5 = 130.27055245823175     # scripts/bubble_oracles.py


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


@pytest.fixture(scope="session")
def e44():
    return hyperbola_complete(4, q=4)


@pytest.fixture(scope="session")
def radial_n4(e44):
    """Radial ground state, N=4, p=q=4, R=20, 2000 nodes."""
    return ground_state_radial(SolveConfig(e44, None, R=20.0, resolution=2000))


@pytest.fixture(scope="session")
def biradial_small(e44):
    """Sign-changing G_1 solution on a coarse 128^2 grid."""
    return minimize_equivariant(SolveConfig(e44, SymmetrySpec(4, 1), R=16.0, resolution=128,
                                            gauge_radius=1.0))
