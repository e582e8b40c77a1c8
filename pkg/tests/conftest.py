import functools
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from laguerre.blaschke import seed_potential
from laguerre.fields import Grid
from laguerre.geometry import run_pipeline

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

GRIDS = (33, 65, 129)


@functools.lru_cache(maxsize=None)
def potential(kind: str, n: int, c: float = 0.0, k: float = 0.0, a: float = 0.0, b: float = 0.0):
    g = Grid.square(n)
    if kind == "harmonic":
        return seed_potential("harmonic", g, a=a, b=b, k=k)
    return seed_potential(kind, g, c=c, k=k)


@functools.lru_cache(maxsize=None)
def pipeline(kind: str, n: int, c: float = 0.0, k: float = 0.0, m: float = 0.0,
             scheme: str = "midpoint_exp", a: float = 0.0, b: float = 0.0):
    """Cached full run; results are shared read-only between tests."""
    return run_pipeline(potential(kind, n, c, k, a, b), m, scheme)


def ratio(coarse: float, fine: float) -> float:
    return coarse / fine


def loglog_slope(hs, errs) -> float:
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
