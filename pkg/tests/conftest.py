import datetime as dt
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from segtrend import fixtures  # noqa: E402
from segtrend.data import read_panel  # noqa: E402

TURKEY_START = dt.date(2020, 3, 18)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def turkey_panel():
    return read_panel(fixtures.path("TUR"), "TUR")


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
