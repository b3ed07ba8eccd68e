import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tailrisk import EmpiricalDistribution

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE: dict = {}


def random_dist(rng, n_max=64, *, signed=True, weighted=None, ties=True, scale=None):
    """Random weighted empirical law with occasional ties and heavy tails."""
    n = int(rng.integers(1, n_max + 1))
    kind = rng.integers(0, 3)
    if kind == 0:
        x = rng.normal(size=n)
    elif kind == 1:
        x = rng.exponential(size=n)
    else:
        x = rng.pareto(2.5, size=n)
    if signed and kind != 0:
        x = x - rng.uniform(0, 2)
    if not signed:
        x = np.abs(x)
    if ties and n > 2 and rng.uniform() < 0.3:
        x[: n // 3] = x[-1]
    x = x * (scale if scale is not None else rng.uniform(0.2, 5.0))
    if weighted is None:
        weighted = rng.uniform() < 0.5
    w = rng.uniform(0.1, 1.0, size=n) if weighted else None
    return EmpiricalDistribution.from_samples(x, w)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
