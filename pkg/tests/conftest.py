import numpy as np
import pytest

from ojasde.model import Distribution, exact_moments

# Filled by tests/test_acceptance.py, printed at the end of the session.
ACCEPTANCE_LINES = {}


@pytest.fixture
def uniform_ctx():
    return exact_moments(Distribution.product_uniform([2.0, 1.0]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
