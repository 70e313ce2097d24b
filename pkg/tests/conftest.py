import math

import pytest

from polaron.params import PhysicalConfig, prepare, reference_config


@pytest.fixture(scope="session")
def ref_dim():
    """Reference spin-branch set (tau_+ = 1, damping weight 2)."""
    return prepare(reference_config())[2]


@pytest.fixture(scope="session")
def ref_dim_single():
    """Reference set with a single damping channel (printed closed forms)."""
    return prepare(reference_config().replace(damping_channels=1))[2]


@pytest.fixture(scope="session")
def density_config():
    return PhysicalConfig(n=5e7, g1=7e-37, g2=7e-37, g12=7e-37)


@pytest.fixture(scope="session")
def density_dim(density_config):
    return prepare(density_config)[2]


@pytest.fixture(scope="session")
def density_dim_single(density_config):
    return prepare(density_config.replace(damping_channels=1))[2]


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


OMEGA_50 = 50 * math.pi
OMEGA_100 = 100 * math.pi
OMEGA_200 = 200 * math.pi


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance lines at the end of the run."""
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
