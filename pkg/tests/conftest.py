import numpy as np
import pytest

from covrt import Dataset

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def four_points():
    return Dataset(np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0.0, 0.0, 1.0, 1.0]))


def dyadic_node(rng, max_rows=50, max_features=5):
    """Random node whose responses are small dyadic rationals, so every sum is exact."""
    n = int(rng.integers(2, max_rows + 1))
    p = int(rng.integers(1, max_features + 1))
    X = rng.random((n, p))
    ties = rng.random(p) < 0.4
    X[:, ties] = np.round(X[:, ties] * 4) / 4
    y = rng.integers(-64, 65, n) / 8.0
    return Dataset(X, y)
