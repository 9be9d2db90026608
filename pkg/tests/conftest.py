import os

import pytest

_LINES = []

PAPER_SCALE = os.environ.get("MUTUAL_HOLDING_PAPER_SCALE") == "1"


def pytest_collection_modifyitems(config, items):
    if PAPER_SCALE:
        return
    skip = pytest.mark.skip(reason="set MUTUAL_HOLDING_PAPER_SCALE=1 to run paper-scale checks")
    for item in items:
        if "paper_scale" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def report():
    """Record one acceptance line; it is echoed in the terminal summary."""
    def _record(label, passed, detail):
        line = f"{label}: {'PASS' if passed else 'FAIL'}  {detail}"
        _LINES.append(line)
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
