from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from mobius_lq.ifs import diag, solomyak, ssc4

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def sol():
    return solomyak(9, Fraction(49, 100))


@pytest.fixture(scope="session")
def ssc():
    return ssc4()


@pytest.fixture(scope="session")
def diag24():
    return diag(2, 4)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
