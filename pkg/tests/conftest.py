import numpy as np
import pytest

from thermal_qcp import XState

#: One line per acceptance criterion, filled by test_acceptance.py.
ACCEPTANCE_LINES = []


def random_xstate(rng, coherent=True):
    """Random valid X state; both coherences nonzero when `coherent`."""
    r11, two_r22, r44 = rng.dirichlet((1.0, 1.0, 1.0))
    r22 = two_r22 / 2
    if coherent:
        u, v = rng.uniform(0.05, 1.0, size=2) * rng.choice((-1, 1), size=2)
    else:
        u = v = 0.0
    return XState(r11, r22, r44, v * r22, u * np.sqrt(r11 * r44))


def werner(alpha):
    """Werner mixture of the singlet with weight `alpha`."""
    return XState((1 - alpha) / 4, (1 + alpha) / 4, (1 - alpha) / 4, -alpha / 2, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
