import numpy as np
import pytest
from scipy.optimize import brentq


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def quadratic_over_ball(Q, b, radius=1.0):
    """Minimiser of 0.5 z^T Q z - b^T z over ||z|| <= radius via the KKT multiplier.

    Independent of any projection method: either Q^{-1} b is feasible, or the
    multiplier mu > 0 solves ||(Q + mu I)^{-1} b|| = radius (monotone in mu).
    """
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)
    z = np.linalg.solve(Q, b)
    if np.linalg.norm(z) <= radius:
        return z
    eye = np.eye(len(b))

    def gap(mu):
        return np.linalg.norm(np.linalg.solve(Q + mu * eye, b)) - radius

    hi = 1.0
    while gap(hi) > 0:
        hi *= 2
    mu = brentq(gap, 0.0, hi, xtol=1e-15, rtol=1e-15)
    return np.linalg.solve(Q + mu * eye, b)


def random_spd(n, rng, cond=10.0):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = np.geomspace(1.0, cond, n)
    return q @ np.diag(eig) @ q.T


@pytest.fixture(scope="session")
def default_fig2_rows():
    """The default desk-scale fig2 sweep, computed once per test session."""
    from glmvi.harness import ExperimentConfig, run_fig2

    return run_fig2(ExperimentConfig.at_scale("fig2", "desk", master_seed=1, timing=False))


# one line per acceptance criterion, printed after the test run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
