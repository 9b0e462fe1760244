import pathlib

import pytest

from edgetqft.tri_model import load_triangulation

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "src" / "edgetqft" / "fixtures"
KNOTS = ("trefoil", "4_1", "5_2")

# (criterion number, line) pairs filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES: list = []


def fixture_path(name: str) -> pathlib.Path:
    return FIXTURES / f"{name}.zft"


@pytest.fixture(scope="session")
def triangulations():
    return {k: load_triangulation(fixture_path(k)) for k in KNOTS}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
