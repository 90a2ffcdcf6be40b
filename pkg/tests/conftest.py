import numpy as np
import pytest

# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = {}


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
