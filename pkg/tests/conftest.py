import math

import pytest

from rdiag_brown import measures as M


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long Monte Carlo tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[key])


@pytest.fixture(scope="session")
def qc():
    return M.quarter_circle()


@pytest.fixture(scope="session")
def mp():
    return M.marchenko_pastur()


@pytest.fixture(scope="session")
def bern():
    return M.make_atomic([(1.0, 0.5), (2.0, 0.5)])


@pytest.fixture(scope="session")
def unif():
    return M.uniform(1.0, 2.0)


@pytest.fixture(scope="session")
def builtins(qc, mp, bern, unif):
    return {"quarter_circle": qc, "marchenko_pastur": mp, "bernoulli": bern, "uniform": unif}


SQRT2 = math.sqrt(2.0)
