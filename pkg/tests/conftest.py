import numpy as np
import pytest

from manifold_sampler import DataMatrix, fit_pca, normalize


def random_eta(nu, N, seed=0):
    """Normalized data built from an arbitrary correlated Gaussian cloud."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(nu, nu)) @ rng.normal(size=(nu, N)) + rng.normal(size=(nu, 1))
    data = DataMatrix(x)
    return normalize(data, fit_pca(data))


@pytest.fixture
def eta_small():
    return random_eta(3, 40, seed=1)


# criterion number -> (passed, measured values), filled by test_acceptance
CRITERIA: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
