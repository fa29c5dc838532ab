import pytest

from nonuniperc.families import (DiestelLeader, Grandparent, OrientedTree, UnimodularTree)

ACCEPTANCE_FAMILIES = [
    OrientedTree(2, 3),
    OrientedTree(1, 2),
    Grandparent(2),
    Grandparent(3),
    DiestelLeader(2, 3),
    UnimodularTree(3),
    UnimodularTree(5),
]


@pytest.fixture(params=ACCEPTANCE_FAMILIES, ids=str)
def family(request):
    return request.param


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
