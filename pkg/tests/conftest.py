from __future__ import annotations

import numpy as np
import pytest

from relstring import ellipse_loop
from relstring import scenarios as sc


@pytest.fixture(scope="session")
def ellipse_pair():
    return sc.convex_zero_velocity(ellipse_loop(2.0, 1.0), 1024)


@pytest.fixture(scope="session")
def ellipse_pair_512():
    return sc.convex_zero_velocity(ellipse_loop(2.0, 1.0), 512)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
