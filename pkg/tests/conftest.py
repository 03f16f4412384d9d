import numpy as np
import pytest

from frontier import phase as ph
from frontier.reaction import validate_reaction


@pytest.fixture(scope="session")
def cubic03():
    return validate_reaction({"kind": "cubic", "a": 0.3})


@pytest.fixture(scope="session")
def branches0(cubic03):
    return ph.manifold_branches(cubic03, 0.0)


@pytest.fixture(scope="session")
def path0(cubic03, branches0):
    return ph.optimal_path(cubic03, 0.0, branches0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def accept():
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def check(n: int, title: str, ok: bool, detail: str = ""):
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
        _ACCEPTANCE[n] = line
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
