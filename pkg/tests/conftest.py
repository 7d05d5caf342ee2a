import numpy as np
import pytest

from ksrand.observables import magic_square, magic_star
from ksrand.quantum import random_states

# fixed seeds so "for any state" property checks are reproducible
STATE_SEED = 20240917


@pytest.fixture(scope="session")
def square():
    return magic_square()


@pytest.fixture(scope="session")
def star():
    return magic_star()


@pytest.fixture(scope="session")
def two_qubit_states():
    return random_states(2, 100, STATE_SEED)


@pytest.fixture(scope="session")
def three_qubit_states():
    return random_states(3, 100, STATE_SEED + 1)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "acceptance" in report.keywords:
        name = report.nodeid.rsplit("::", 1)[-1]
        number, _, title = name.removeprefix("test_").partition("_")
        _acceptance.append((int(number), title.replace("_", " "), report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, outcome in sorted(_acceptance):
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{mark}] criterion {number}: {title}")
