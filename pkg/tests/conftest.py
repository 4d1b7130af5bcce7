import numpy as np
import pytest

from roughness import from_samples
from roughness.dyadic import FaberSchauderPyramid

# acceptance criteria register their outcome here; the terminal-summary hook
# prints one line per criterion after the run
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{name}] {status} {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_series(rng, n, scale=1.0):
    return from_samples(scale * rng.standard_normal(2**n + 1), n)


def random_bridge(rng, n, scale=1.0):
    """Random series with matching endpoints (x(0) = x(1))."""
    v = scale * rng.standard_normal(2**n + 1)
    v[-1] = v[0]
    return from_samples(v, n)


def random_pyramid(rng, depth, scale=1.0):
    theta = tuple(scale * rng.standard_normal(2**m) for m in range(depth))
    return FaberSchauderPyramid(0.0, 0.0, theta, depth)
