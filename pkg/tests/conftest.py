import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from taucalc import conjugation_action, cyclic, inversion_action, semidirect, symmetric, trivial_action  # noqa: E402


def build_groups():
    Z2, Z3, Z4, S3 = cyclic(2), cyclic(3), cyclic(4), symmetric(3)
    E = cyclic(1)
    return {
        "Z2xZ3": semidirect(Z2, Z3, inversion_action(Z2, Z3), label="Z2xZ3"),
        "1xZ4": semidirect(E, Z4, trivial_action(E, Z4), label="1xZ4"),
        "Z2xS3": semidirect(Z2, S3, conjugation_action(Z2, S3, 1), label="Z2xS3"),
        "Z2xZ4": semidirect(Z2, Z4, inversion_action(Z2, Z4), label="Z2xZ4"),
    }


GROUPS = build_groups()


@pytest.fixture(scope="session")
def groups():
    return GROUPS


@pytest.fixture(params=list(GROUPS), scope="session")
def G(request):
    return GROUPS[request.param]


@pytest.fixture(scope="session")
def D3():
    return GROUPS["Z2xZ3"]


ACCEPTANCE_LINES = {}


def record_acceptance(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
