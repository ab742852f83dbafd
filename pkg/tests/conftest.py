import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line: criterion(number, title, passed, detail)."""
    table = request.config.stash[ACCEPTANCE]

    def record(number, title, passed, detail=""):
        table[number] = (title, bool(passed), detail)
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config.stash.get(ACCEPTANCE, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(table):
        title, passed, detail = table[number]
        line = f"{'PASS' if passed else 'FAIL'}  [{number:2d}] {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
