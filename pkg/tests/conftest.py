import numpy as np
import pytest

from mixedswe import mesh as msh


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running scenario checks")


@pytest.fixture(scope="session")
def periodic4():
    return msh.build_periodic_square(4)


@pytest.fixture(scope="session")
def periodic2():
    return msh.build_periodic_square(2)


@pytest.fixture(scope="session")
def jittered():
    return msh.build_square(4, jitter=0.2, seed=3)


@pytest.fixture(scope="session")
def sphere0():
    return msh.build_icosahedral_sphere(0)


@pytest.fixture(scope="session")
def sphere2():
    return msh.build_icosahedral_sphere(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
