import numpy as np
import pytest

RULES = ("log", "brier", "spherical", "zero-one")


def random_simplex(rng, k, size=None, concentration=1.0):
    alpha = np.full(k, concentration)
    return rng.dirichlet(alpha, size=size)


def sparse_simplex(rng, k):
    """A probability vector with some exact zeros (at least one nonzero)."""
    theta = rng.dirichlet(np.ones(k))
    mask = rng.random(k) < 0.3
    mask[rng.integers(k)] = False
    theta[mask] = 0.0
    return theta / theta.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
