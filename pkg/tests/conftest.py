import numpy as np
import pytest

from tradenet.graph import WeightedNetwork


def labels(n):
    return tuple(f"N{i:02d}" for i in range(n))


def complete(n, w=1.0):
    W = np.full((n, n), w)
    np.fill_diagonal(W, 0.0)
    return WeightedNetwork(labels(n), W)


def path(n):
    W = np.zeros((n, n))
    for i in range(n - 1):
        W[i, i + 1] = W[i + 1, i] = 1.0
    return WeightedNetwork(labels(n), W)


def star(n):
    W = np.zeros((n, n))
    W[0, 1:] = W[1:, 0] = 1.0
    return WeightedNetwork(labels(n), W)


def two_cliques(size=6, bridge=1e-3):
    n = 2 * size
    W = np.zeros((n, n))
    W[:size, :size] = 1.0
    W[size:, size:] = 1.0
    np.fill_diagonal(W, 0.0)
    W[size - 1, size] = W[size, size - 1] = bridge
    return WeightedNetwork(labels(n), W)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {text}")
