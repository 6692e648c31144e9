import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from precipopt import _backend  # noqa: E402
from precipopt.config import RunConfig  # noqa: E402

BACKENDS = ["python"] + (["compiled"] if _backend.compiled_available() else [])


class LinearKinetics:
    """``N(c) = a c`` and ``G0(c) = b c``: the unphysical arithmetic test law."""

    def __init__(self, a=1.0, b=1.0):
        self.a, self.b = a, b

    def rates(self, c):
        return self.a * c, self.a, self.b * c, self.b


class ZeroNucleation:
    def rates(self, c):
        return 0.0, 0.0, max(c, 0.0), 1.0 if c > 0 else 0.0


@pytest.fixture(scope="session")
def cfg():
    return RunConfig()


@pytest.fixture(scope="session")
def model(cfg):
    return cfg.model()


@pytest.fixture(scope="session")
def aset(cfg, model):
    return cfg.admissible_set(model.grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_feasible(aset, rng):
    """Projected random point: feasible and generically off the uniform control."""
    w = rng.uniform(aset.lower, aset.upper, aset.n)
    return aset.project(w)


# acceptance criteria record one line each; printed after the test session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
