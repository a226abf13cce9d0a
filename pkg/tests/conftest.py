import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kdil.fixtures import preset
from kdil.serialize import parse_instance

settings.register_profile("kdil", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("kdil")


def load(name: str, seed: int = 0):
    return parse_instance(preset(name, seed))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def flip():
    return load("fix-c")


@pytest.fixture(scope="session")
def flip_z2():
    return load("fix-e")


# filled by test_acceptance.py, printed once at the end of the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
