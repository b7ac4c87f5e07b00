import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from dynsamp.dynamics import DiscreteSystem, random_operator
from dynsamp.frames import VectorSystem
from dynsamp.hilbert import Subspace


def complex_gaussian(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_system(seed, dim=6, rho=0.5, J=None, rank=None):
    """Seeded contraction, source, initial state and sampling family."""
    rng = np.random.default_rng(seed)
    A = random_operator(rng, dim, rho)
    if rank is None or rank == dim:
        W = Subspace.full(dim)
    else:
        W = Subspace.from_vectors(complex_gaussian(rng, rank, dim))
    w = W.from_coordinates(complex_gaussian(rng, W.rank))
    x0 = complex_gaussian(rng, dim)
    G = VectorSystem(complex_gaussian(rng, J or 2 * dim, dim))
    return DiscreteSystem(A, W, w, x0), G


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


def complex_arrays(shape):
    """Hypothesis strategy for bounded complex arrays of a fixed shape."""
    return st.tuples(hnp.arrays(float, shape, elements=finite),
                     hnp.arrays(float, shape, elements=finite)).map(lambda p: p[0] + 1j * p[1])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
