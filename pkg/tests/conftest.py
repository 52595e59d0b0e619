import numpy as np
import pytest

from dosepref.basis import BasisSpec, default_basis
from dosepref.model import CompositeSurface, DoseGrid, OutcomeSurface, PreferenceModel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def quadratic_surface(const=0.0, slope=2.0, curv=-2.0, x_slopes=(0.0, 0.0)):
    """Surface Q(x, a) = const + a*(slope + x . x_slopes) + curv*a^2 for p=2."""
    spec = default_basis(2)
    c = np.zeros(spec.n_features(2))
    c[0] = const
    c[3] = slope
    c[4] = curv
    c[5], c[6] = x_slopes
    return OutcomeSurface(spec, c)


def random_surface(rng, p=2):
    spec = default_basis(p)
    c = rng.normal(0.0, 1.0, size=spec.n_features(p))
    c[2 + p] = -abs(c[2 + p]) - 0.5  # concave in dose
    return OutcomeSurface(spec, c)


def random_composite(rng, p=2, q_covs=(0, 1)):
    theta = rng.normal(0.0, 1.0, size=1 + len(q_covs))
    pref = PreferenceModel(theta, tuple(q_covs))
    return CompositeSurface(random_surface(rng, p), random_surface(rng, p), pref)


@pytest.fixture
def wide_grid():
    return DoseGrid(-6.0, 6.0, 241)
