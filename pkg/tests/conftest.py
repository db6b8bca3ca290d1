import numpy as np
import pytest
from hypothesis import settings

from elliptic_radial.problem import ProblemSpec, make_coefficient, make_nonlinearity

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def build_spec(N, coeffs, nonlins, epsilon=0.5):
    """``coeffs`` / ``nonlins``: lists of (family, params) pairs."""
    return ProblemSpec(
        N,
        tuple(make_coefficient(n, p) for n, p in coeffs),
        tuple(make_nonlinearity(n, p) for n, p in nonlins),
        epsilon,
    )


def sinhc(r):
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    nz = r > 0
    out[nz] = np.sinh(r[nz]) / r[nz]
    return out


@pytest.fixture
def sinh_spec():
    return build_spec(3, [("constant", [1.0])], [("power", [1.0])])


@pytest.fixture
def symmetric_pair():
    return build_spec(3, [("constant", [1.0])] * 2, [("linear_mix", [0.5, 0.5])] * 2)
