import numpy as np
import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: release-gate criteria (long-running)")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260808)
