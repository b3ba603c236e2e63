import numpy as np
import pytest

from kinverify.distributions import maxwellian
from kinverify.kernel import KernelParams


@pytest.fixture(scope="session")
def maxi2():
    return maxwellian(2)


@pytest.fixture(scope="session")
def maxi3():
    return maxwellian(3)


@pytest.fixture(scope="session")
def params_half():
    return KernelParams(n=2, s=0.5, gamma=0.0, normalization="grazing")


def make_bump(center, radius=1.0):
    """Smooth bump supported in the ball of the given radius."""
    center = np.asarray(center, dtype=float)

    def g(pts):
        pts = np.asarray(pts, dtype=float)
        d2 = np.sum((pts - center) ** 2, axis=-1) / radius ** 2
        out = np.zeros(pts.shape[:-1])
        inside = d2 < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - d2[inside]))
        return out

    return g
