import numpy as np
import pytest

from vring.ansatz import RingParameters
from vring.freeboundary import solve_steady

KAPPA = 4.0 * np.pi


@pytest.fixture(scope="session")
def params():
    return RingParameters(KAPPA, 1.0, 0.05)


@pytest.fixture(scope="session")
def ring(params):
    return solve_steady(params)


@pytest.fixture(scope="session")
def coarse_ring():
    return solve_steady(RingParameters(KAPPA, 1.0, 0.1))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS, key=lambda k: int(k[2:])):
            terminalreporter.write_line(RESULTS[key])
