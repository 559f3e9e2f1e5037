import math

import pytest

from nodallab.geometry import make_domain


@pytest.fixture
def torus2():
    return make_domain("torus", 2)


@pytest.fixture
def box2():
    return make_domain("box-dirichlet", 2)


TWO_PI = 2 * math.pi


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
