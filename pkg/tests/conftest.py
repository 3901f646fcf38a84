import pytest
from hypothesis import settings

from qaw import QContext
from qaw.integrand import FamilyParams

settings.register_profile("qaw", deadline=None)
settings.load_profile("qaw")

N2_A = (0.5, 0.6, 0.7, 0.8)
N3_A = (0.45, 0.5, 0.55, 0.6, 0.65, 0.7)
N4_A = (0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75)


@pytest.fixture(scope="session")
def p2():
    return FamilyParams(2, N2_A, QContext(0.1))


@pytest.fixture(scope="session")
def p3():
    return FamilyParams(3, N3_A, QContext(0.01))


@pytest.fixture(scope="session")
def p4():
    return FamilyParams(4, N4_A, QContext(0.1))


@pytest.fixture(scope="session")
def p3_q1():
    """The N = 3 point at q = 0.1, for coefficient checks."""
    return FamilyParams(3, N3_A, QContext(0.1))


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
        terminalreporter.write_line(line)
