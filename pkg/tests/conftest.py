import math

import pytest
from hypothesis import HealthCheck, settings

from pmmdi.povm import ChannelModel

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# realistic device parameters used throughout the suite
REALISTIC = dict(eta_d=0.145, V=0.95, delta=math.pi / 60, p_d=8e-8, f_EC=1.15)


def realistic_model(L: float, mu: float) -> ChannelModel:
    return ChannelModel(eta_t=10 ** (-0.02 * L), mu=mu, **REALISTIC)


@pytest.fixture
def table2_300():
    return realistic_model(300.0, 0.1)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
