import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qgraph_switch import fixtures

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def tetra():
    return fixtures.tetrahedron()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def assert_levels_close(a, b, atol):
    a, b = np.asarray(a), np.asarray(b)
    n = min(len(a), len(b))
    assert n > 0
    np.testing.assert_allclose(a[:n], b[:n], rtol=0, atol=atol)


def analytic_loop(L, k_max, alpha=0.0):
    """Wavenumbers of a ring: k L +- alpha in 2 pi Z, with multiplicity."""
    out = []
    n_max = int(k_max * L / (2 * math.pi)) + 2
    for n in range(-n_max, n_max + 1):
        for sign in (1, -1):
            k = (2 * math.pi * n - sign * alpha) / L
            if 0 < k < k_max:
                out.append(k)
    return np.sort(out)
