import numpy as np
import pytest

from speclab import analytic, geometry, mps

ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical checks")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def disk_spec():
    return analytic.disk_spectrum(1.0, 2600)


@pytest.fixture(scope="session")
def disk_grid():
    return geometry.build_grid(geometry.disk(1.0), 4096)


@pytest.fixture(scope="session")
def ball_spec():
    return analytic.ball_spectrum(1.0, 2300)


@pytest.fixture(scope="session")
def ball_grid():
    return geometry.build_grid(geometry.ball(1.0), (64, 128))


@pytest.fixture(scope="session")
def ellipse_spec():
    return mps.mps_spectrum(geometry.ellipse(1.0, 0.8), 50)


@pytest.fixture(scope="session")
def ellipse_grid():
    return geometry.build_grid(geometry.ellipse(1.0, 0.8), 2048)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
