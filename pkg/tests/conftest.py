import pytest

from iotaml.config import preset
from iotaml.protocol import prepare


@pytest.fixture(scope="session")
def jam_base():
    """Seed-0 default scenario with T trained and A's predictor built."""
    sim, train, observe = prepare(preset("jamming"), seed=0)
    return sim, train, observe


@pytest.fixture(scope="session")
def prio_base():
    sim, train, observe = prepare(preset("priority_violation"), seed=0)
    return sim, train, observe


@pytest.fixture(scope="session")
def prio_transmitter():
    """Priority-violation scenario, seed 0, with only T trained."""
    from iotaml.defense_game import prepare_transmitter
    return prepare_transmitter(preset("priority_violation"), 0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
