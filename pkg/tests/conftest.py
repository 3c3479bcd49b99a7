import pytest

from csflab import scenarios
from csflab.flow import FlowConfig, run

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def circle_run():
    """Unit circle, n = 256, up to t = 0.45."""
    return run(scenarios.make("circle", {"R": 1.0}, 256), FlowConfig(t_end=0.45, snapshot_every=0.01))


@pytest.fixture(scope="session")
def coil_run():
    """Twisted (1, 8) torus coil while it stays twisted."""
    return run(scenarios.make("torus_coil", {}, 256), FlowConfig(t_end=0.24, snapshot_every=0.005))


@pytest.fixture(scope="session")
def coil_long_run():
    """Same coil continued past the loss of twistedness."""
    return run(scenarios.make("torus_coil", {}, 256), FlowConfig(t_end=0.34, snapshot_every=0.01))


@pytest.fixture(scope="session")
def sphere_run():
    return run(scenarios.make("spherical_lissajous", {"R": 1.0}, 512), FlowConfig(t_end=0.3, snapshot_every=0.01))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def helical_coil_run():
    """Coil with R = q = 128 and r = 1: locally a helix with kappa = tau = 1/2."""
    c = scenarios.make("torus_coil", {"R": 128.0, "r": 1.0, "p": 1, "q": 128}, 4096)
    return run(c, FlowConfig(t_end=2.0, snapshot_every=0.1))
