import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def random_density(rng, rank=None):
    """Random 4x4 density matrix from a Ginibre draw."""
    k = rank or 4
    g = rng.normal(size=(4, k)) + 1j * rng.normal(size=(4, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_ket(rng):
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
