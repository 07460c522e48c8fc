import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from onesided import _backend, operators, weights
from onesided.grid import Grid, GridFunction

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

BACKENDS = sorted(_backend.available())


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per importable kernel backend."""
    mod = _backend.available()[request.param]
    monkeypatch.setattr(operators, "_k", mod)
    monkeypatch.setattr(weights, "_k", mod)
    return mod


def unit_grid(n, lo=0.0, hi=1.0):
    return Grid(lo, (hi - lo) / n, n)


def weight_from(values, grid=None):
    values = np.asarray(values, dtype=float)
    return GridFunction(grid or unit_grid(values.size), values, weight=True)


def func_from(values, grid=None):
    values = np.asarray(values)
    return GridFunction(grid or unit_grid(values.size), values)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
