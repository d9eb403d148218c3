import os
import warnings

import pytest

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture
def fixture_path():
    return lambda name: os.path.join(FIXTURES, name)


@pytest.fixture(autouse=True)
def _quiet_adaptation():
    # adaptation misses are reported through ChainState.warning; keep test output readable
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="acceptance window not reached")
        yield


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
