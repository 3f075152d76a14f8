import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from biglearn_gmm.gmm import GmmParams

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_spd(rng, d, floor=0.1):
    A = rng.standard_normal((d, d))
    return A @ A.T / d + floor * np.eye(d)


def random_model(rng, K, d, spread=2.0, floor=0.1):
    w = rng.dirichlet(np.ones(K))
    means = spread * rng.standard_normal((K, d))
    covs = np.stack([random_spd(rng, d, floor) for _ in range(K)])
    return GmmParams(w, means, covs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary so the
# verdicts are visible even when output capture is on
ACCEPTANCE_LINES = []


def record_acceptance(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
