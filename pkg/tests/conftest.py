import pytest

from swiptmac import Scenario
from swiptmac.sweep import reference_scenario

ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def ref03():
    return reference_scenario(g2=0.3)


@pytest.fixture(scope="session")
def ref08():
    return reference_scenario(g2=0.8)


@pytest.fixture
def single_user():
    """h = 1, P_c = 1 on user 1; user 2 has no power budget."""
    return Scenario.from_arrays((1.0, 0.0), (0.5, 0.3), (5.0, 0.0), (1.0, 0.0))


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    store = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(number, title, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        store[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        terminalreporter.write_line(store[number])
