import numpy as np
import pytest

from mixmarkov.model import ModelSpec, PanelDataset, ParameterSet

_ACCEPTANCE_LINES = []


def record_acceptance(name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_instance(rng, n, T, K, L, p, scale=1.0):
    """Random panel and random parameters (not fitted; any y path is allowed)."""
    y = rng.integers(1, K + 1, size=(n, T))
    x = np.concatenate([np.ones((n, T, 1)), rng.normal(size=(n, T, p - 1))], axis=2)
    data = PanelDataset(y, x)
    pi = rng.dirichlet(np.ones(L))
    alpha = rng.normal(scale=scale, size=(L, K, K - 1, p))
    return data, ParameterSet(pi, alpha), ModelSpec.full(K, L, p)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
