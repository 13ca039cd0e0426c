import logging

import pytest

from rfclust.fixtures import FixtureSpec, generate
from rfclust.harness import RunConfig, run_lopo

_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance[name] = report.outcome.upper()


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_acceptance.items()):
        terminalreporter.write_line(f"{outcome:7s} {name}")


@pytest.fixture(autouse=True)
def _quiet_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="rfclust")


@pytest.fixture(scope="session")
def planted():
    return generate(FixtureSpec(seed=0))


@pytest.fixture(scope="session")
def deceptive():
    return generate(FixtureSpec(seed=0, deceptive_fraction=0.2))


@pytest.fixture(scope="session")
def planted_run(planted):
    return run_lopo(planted.dataset, RunConfig("DE1"))


@pytest.fixture(scope="session")
def deceptive_run(deceptive):
    return run_lopo(deceptive.dataset, RunConfig("DE1"))
