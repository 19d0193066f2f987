import pytest

from deit.scenario import bundled_scenario, parse_scenario
from deit.spin import SpinSector


@pytest.fixture(scope="session")
def reference():
    return parse_scenario(bundled_scenario())


@pytest.fixture(scope="session")
def medium(reference):
    return reference.medium


@pytest.fixture(scope="session")
def scene(reference):
    return reference.scene


@pytest.fixture(scope="session")
def open1():
    return SpinSector(1, 0)


@pytest.fixture(scope="session")
def closed():
    return SpinSector(0, 0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance_results", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for line in results.values():
        terminalreporter.write_line(line)
