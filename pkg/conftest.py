import numpy as np
import pytest

from src.point_process import Window


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the long acceptance checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo acceptance check (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


@pytest.fixture
def square10():
    return Window.centered(5.0)
