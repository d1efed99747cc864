import math
import sys

import pytest

from billiard_zeta.database import build_database
from billiard_zeta.geometry import equilateral
from billiard_zeta.spectrum import build_spectrum

SQRT3 = math.sqrt(3.0)


@pytest.fixture(scope="session")
def r6():
    return equilateral(6.0)


@pytest.fixture(scope="session")
def db8(r6):
    return build_database(r6, 8)


@pytest.fixture(scope="session")
def db10(r6):
    return build_database(r6, 10)


@pytest.fixture(scope="session")
def spec10(db10):
    return build_spectrum(db10, db10.horizon)


@pytest.fixture(scope="session")
def spec8(db8):
    return build_spectrum(db8, db8.horizon)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
