import sys
import warnings

import pytest

from qnvp.phase_space import PhaseGrid


@pytest.fixture
def unit_grid():
    return PhaseGrid(32, 128, 1.0, 8.0)


@pytest.fixture(autouse=True)
def _quiet_resolution_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="dt=")
        yield


def pytest_terminal_summary(terminalreporter):
    mods = [m for name, m in list(sys.modules.items()) if name.rsplit(".", 1)[-1] == "test_acceptance"]
    RESULTS = [line for m in mods for line in getattr(m, "RESULTS", [])]
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
