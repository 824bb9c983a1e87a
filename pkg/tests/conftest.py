import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from quarticflow import PhaseState, build_base, build_shifted, kov_chart_system

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# lines recorded by tests/test_acceptance.py, printed in the terminal summary
ACCEPTANCE_LINES = []

# initial states that stay inside the finder windows over T = 100 and
# cross the pole-chart switch radius several times
FAMILY_IC = PhaseState("band", np.array([1.0, 0.0]), np.array([0.5, 0.5]))
KOV_IC = PhaseState("polar", np.array([2.0, 1.0]), np.array([0.7, 0.2]))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def base0():
    return build_base(0.0)


@pytest.fixture(scope="session")
def base1():
    return build_base(1.0)


@pytest.fixture(scope="session")
def base2():
    return build_base(2.0)


@pytest.fixture(scope="session")
def shifted1():
    return build_shifted(1.0, p=1.0)


@pytest.fixture(scope="session")
def kov():
    return kov_chart_system()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20261016)
