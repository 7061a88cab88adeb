import numpy as np
import pytest

from zeromodes.quadrature import QuadratureRule
from zeromodes.zero_modes import loss_yau_pair


@pytest.fixture(scope="session")
def loss_yau():
    return loss_yau_pair()


@pytest.fixture(scope="session")
def rule():
    return QuadratureRule(tol=1e-6)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def random_points(rng, n, radius):
    """Uniform points in the ball of the given radius."""
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    return d * radius * rng.random(n)[:, None] ** (1 / 3)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for i, (ok, detail) in sorted(test_acceptance.RESULTS.items()):
        terminalreporter.write_line(test_acceptance._line(i, ok, detail))
