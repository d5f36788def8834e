import pytest

from helpers import DIAMOND_TEXT, SINGLE_EDGE_TEXT, instance
from krelnet.graph_model import parse_instance


@pytest.fixture
def diamond():
    return parse_instance(DIAMOND_TEXT)


@pytest.fixture
def diamond_unweighted():
    # a-b, a-c, b-d, c-d, then the detour a-w-c
    return instance("abcdw", [("a", "b", "1/2"), ("a", "c", "1/2"), ("b", "d", "1/2"),
                             ("c", "d", "1/2"), ("a", "w", "1/2"), ("w", "c", "1/2")], "ad")


@pytest.fixture
def single_edge():
    return parse_instance(SINGLE_EDGE_TEXT)


# -- acceptance reporting -----------------------------------------------------

_CRITERIA: dict[int, tuple[bool, str]] = {}


class CriterionRecorder:
    def __init__(self, number):
        self.number = number

    def record(self, ok, detail):
        _CRITERIA[self.number] = (bool(ok), detail)
        return ok


@pytest.fixture
def criterion(request):
    number = request.node.get_closest_marker("criterion").args[0]
    rec = CriterionRecorder(number)
    yield rec
    if number not in _CRITERIA:
        _CRITERIA[number] = (False, "raised before reaching a verdict")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
