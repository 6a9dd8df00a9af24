import numpy as np
import pytest

from infocorr.probability import JointPmf, attach_condition


def random_pmf(rng, nx, ny, sparsity=0.0, embed=False):
    probs = rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny)
    if sparsity:
        mask = rng.random((nx, ny)) < sparsity
        if mask.all():
            mask.flat[rng.integers(nx * ny)] = False
        probs = np.where(mask, 0.0, probs)
        probs /= probs.sum()
    xv = rng.normal(size=nx) if embed else None
    yv = rng.normal(size=ny) if embed else None
    return JointPmf(probs, xv, yv)


def random_conditioned(rng, nx, ny, nu, embed=True):
    xv = rng.normal(size=nx) if embed else None
    yv = rng.normal(size=ny) if embed else None
    slices = [JointPmf(rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny), xv, yv) for _ in range(nu)]
    return attach_condition(rng.dirichlet(np.ones(nu)), slices)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(module.RESULTS):
        terminalreporter.write_line(line)
