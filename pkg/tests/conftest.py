import numpy as np
import pytest

from hubbard_trotter.services.lattice import build


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow regression tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: minutes of dense diagonalisation; needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def chain_1d():
    return build("1d")


@pytest.fixture(scope="session")
def square():
    return build("square")


@pytest.fixture(scope="session")
def triangular():
    return build("triangular")
