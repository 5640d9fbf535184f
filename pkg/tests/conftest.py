import math

import numpy as np
import pytest

from eitfbs.physics import BsCoefficients, gaussian_pulse, time_grid

SQ = 1 / math.sqrt(2)


@pytest.fixture
def ideal_bs():
    """Symmetric lossless 50/50 splitter, phi1 + phi2 = pi."""
    return BsCoefficients(SQ, SQ, SQ, SQ, math.pi / 2, math.pi / 2)


@pytest.fixture
def paper_bs():
    return BsCoefficients.from_powers(0.46, 0.46, 0.51, 0.39, cos_phi=-0.944)


@pytest.fixture(scope="session")
def fig5_pulse():
    return gaussian_pulse(0.0, 3.0e-6, 1.0, time_grid(4096, 24e-6))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
