import numpy as np
import pytest

from rrmkrr import Dataset, KernelSpec

ACCEPTANCE_LINES: list[str] = []


def random_instance(rng, n=15, p=4, d=1, rank=2, noise=0.05):
    """Low-rank vector-valued data on [0, 1]^d."""
    X = rng.uniform(size=(n, d))
    basis = np.column_stack([np.sin(3 * (k + 1) * X.sum(axis=1)) for k in range(rank)])
    Y = basis @ rng.standard_normal((rank, p)) + noise * rng.standard_normal((n, p))
    return Dataset(X, Y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def spec1():
    return KernelSpec.default(1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
