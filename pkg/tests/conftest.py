import pytest
from hypothesis import HealthCheck, settings

from entropia import zoo

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def doubling():
    return zoo.make_circle_map("doubling")


@pytest.fixture(scope="session")
def rotation():
    return zoo.make_circle_map("rotation", 0.30902)


@pytest.fixture(scope="session")
def cat():
    return zoo.make_toral_automorphism(zoo.CAT)


@pytest.fixture(scope="session")
def logistic():
    return zoo.make_logistic()


@pytest.fixture(scope="session")
def identity():
    return zoo.make_identity(1)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[k])
