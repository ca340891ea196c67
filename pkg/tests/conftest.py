import numpy as np
import pytest

from ambient_riemann import manifolds as mf

# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def catalog():
    return {
        "sphere3": mf.sphere(3),
        "sphere4": mf.sphere(4),
        "so4": mf.so_n(4),
        "stiefel": mf.stiefel(5, 2, 2.0),
        "stiefel1": mf.stiefel(5, 2, 1.0),
        "sasaki": mf.sasaki_sphere_tangent(3),
        "grassmann": mf.grassmann(5, 2),
        "flag": mf.flag(5, (2, 2, 1)),
    }


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
