"""
Shared fixtures and the ``slow`` marker for full-resolution runs.
"""

import pytest

from ringsplit.config import RunConfig
from ringsplit.grid import Grid2D, make_grid
from ringsplit.model import ModelSpec, model_spec_from_config

SMALL_RING = {"n": 64, "step": 0.5, "r0": 6.0, "d0": 1.5, "dt": 0.05}


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-resolution tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-resolution run, skipped unless --runslow is given")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def small_config() -> RunConfig:
    return RunConfig().override(**SMALL_RING)


@pytest.fixture
def small_spec(small_config) -> ModelSpec:
    return model_spec_from_config(small_config)


@pytest.fixture
def small_grid(small_config) -> Grid2D:
    return make_grid(small_config.numerics.n, small_config.numerics.step)

