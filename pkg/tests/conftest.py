import numpy as np
import pytest
from hypothesis import settings

from vclab.dynamics import VortexConfiguration, min_distance

settings.register_profile("ci", deadline=None, max_examples=40, print_blob=True)
settings.load_profile("ci")

ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_log(request):
    """Collects one line per acceptance criterion for the terminal summary."""
    return request.config.stash[ACCEPTANCE_KEY]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


def random_configuration(rng, n, min_sep=0.3, box=1.5):
    """Rejection-sampled configuration with well separated vortices."""
    while True:
        Z = rng.uniform(-box, box, size=(n, 2))
        if min_distance(Z) >= min_sep:
            break
    g = rng.uniform(0.5, 2.0, n) * rng.choice([-1.0, 1.0], n)
    return VortexConfiguration(Z, g)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
