import pytest

from circlelab.forms import make_system
from circlelab.pipeline import resolve_system


def sq(n, coeffs=None):
    coeffs = coeffs or [1] * n
    return {tuple(2 if j == i else 0 for j in range(n)): c for i, c in enumerate(coeffs)}


@pytest.fixture(scope="session")
def n2():
    return resolve_system("n2")


@pytest.fixture(scope="session")
def n4():
    return resolve_system("n4")


@pytest.fixture(scope="session")
def n6():
    return resolve_system("n6")


@pytest.fixture(scope="session")
def diag_minus():
    """x^3 - y^3, x^2 - y^2."""
    return make_system([1, -1], {(2, 0): 1, (0, 2): -1})


@pytest.fixture(scope="session")
def n1():
    return make_system([1], {(2,): 1})


ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
