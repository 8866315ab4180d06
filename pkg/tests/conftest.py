import numpy as np
import pytest

from kerrdyn.fockspace import FockBasis
from kerrdyn.model import ModelParams

import time

ACCEPTANCE_LINES = []
SESSION_START = time.monotonic()


@pytest.fixture
def basis3():
    return FockBasis(3)


@pytest.fixture
def fig_params():
    return ModelParams.from_rotation(0.15, omega1=1.0, omega2=0.5, beta1=0.1, beta2=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


@pytest.fixture(scope="session")
def session_start():
    return SESSION_START


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
