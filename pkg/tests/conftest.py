import numpy as np
import pytest

from vdlab.grid import GridSpec
from vdlab.state import make_initial_data
from vdlab.symbols import PhysParams

# criterion number -> (verdict, detail); filled by test_acceptance.py
CRITERIA = {}


def record_criterion(number, passed, detail=""):
    CRITERIA[number] = ("PASS" if passed else "FAIL", detail)
    print(f"criterion {number}: {CRITERIA[number][0]} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        verdict, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {verdict} {detail}")


@pytest.fixture
def params():
    return PhysParams(1.0, -0.5, 2.0)


@pytest.fixture
def grid16():
    return GridSpec(16, 4.0)


@pytest.fixture
def state16(grid16):
    return make_initial_data(grid16, 0.1, profile="random_bandlimited", seed=3, width=0.6)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
