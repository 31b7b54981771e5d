import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default",
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

_LABELS: dict[str, str] = {}
_OUTCOMES: dict[str, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None and mark.args:
            _LABELS[item.nodeid] = mark.args[0]


def pytest_runtest_logreport(report):
    if report.nodeid not in _LABELS:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _OUTCOMES[report.nodeid] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, label in sorted(_LABELS.items(), key=lambda kv: kv[1]):
        if nodeid in _OUTCOMES:
            terminalreporter.write_line(f"{_OUTCOMES[nodeid]}  {label}")


@pytest.fixture(scope="session")
def fixtures_dir():
    from osctest.cli import FIXTURES

    return FIXTURES


@pytest.fixture(scope="session")
def load_fixture():
    from osctest.cli import resolve_problem
    from osctest.problem import load_problem

    return lambda name: load_problem(resolve_problem(name))
