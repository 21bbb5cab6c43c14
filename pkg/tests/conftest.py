import numpy as np
import pytest

from mmfsk import AntennaArray, CandidateGrid, mimo_cross_array


@pytest.fixture(scope="session")
def desk_array():
    """Desk-scale aperture: 16 TX x 16 RX crossed linear arrays, 20 cm."""
    return mimo_cross_array(16, 16, 0.20)


@pytest.fixture(scope="session")
def tiny_array():
    """Far-field toy: a handful of elements within 2 cm."""
    return mimo_cross_array(4, 4, 0.02)


@pytest.fixture
def monostatic():
    """Single colocated TX/RX element at the origin."""
    zero = np.zeros((1, 3))
    return AntennaArray(zero, zero)


@pytest.fixture
def desk_grid():
    return CandidateGrid.regular(64, 64, 0.001)
