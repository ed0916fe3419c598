import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_channel(rng, n, m, gain=1.0):
    """Rayleigh channel: i.i.d. circularly-symmetric complex Gaussian."""
    scale = np.sqrt(gain / 2.0)
    return scale * (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m)))
