import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from prandtl_axis.grid import Grid  # noqa: E402
from prandtl_axis.lift import LiftParams  # noqa: E402
from prandtl_axis.weight import WeightSpec, build_weight  # noqa: E402


@pytest.fixture(scope="session")
def paper_weight():
    return build_weight(WeightSpec.paper_default())


@pytest.fixture(scope="session")
def grid40():
    return Grid(40.0, 4000)


@pytest.fixture
def unit_kappa():
    return LiftParams(1.0)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""
    def emit(number, passed, text):
        tag = "INFO" if passed is None else ("PASS" if passed else "FAIL")
        line = f"[{tag}] criterion {number:>2}: {text}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return passed
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES, key=lambda x: x[0]):
            terminalreporter.write_line(line)
