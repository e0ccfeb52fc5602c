import numpy as np
import pytest

from secretgraph.graph import ghz, line

_ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["ghz3", "line4"])
def small_graph(request):
    return {"ghz3": ghz(3), "line4": line(4)}[request.param]


@pytest.fixture
def report_criterion():
    """Record one PASS/FAIL line; the summary prints them after the run."""

    def record(number, title, passed, detail=""):
        line_ = f"{'PASS' if passed else 'FAIL'} [{number:>2}] {title}"
        if detail:
            line_ += f" ({detail})"
        _ACCEPTANCE.append((number, line_))
        print(line_)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, text in sorted(_ACCEPTANCE):
        terminalreporter.write_line(text)
