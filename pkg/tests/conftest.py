import numpy as np
import pytest

from skfluct.coupled import CoupledDisorder

# Lines printed at the end of the session by the acceptance module.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def triple():
    return CoupledDisorder.sample(5, master_seed=77, replica_index=3)
