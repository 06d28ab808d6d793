import pytest

from conoshock.background import solve_background
from conoshock.gas import GasParameters
from conoshock.spaces import StripGrid


@pytest.fixture(scope="session")
def params():
    return GasParameters.from_nu(2.0, 0.01)


@pytest.fixture(scope="session")
def background(params):
    return solve_background(params, 1.0)


@pytest.fixture(scope="session")
def grid(background):
    return StripGrid(-12.0, 12.0, 512, background.omega0, background.omega1, 65)


_ACCEPTANCE = []


@pytest.fixture
def acceptance_log(capsys):
    """Record one PASS/FAIL line per acceptance criterion; echoed now and in the summary."""

    def log(line):
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line)

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
