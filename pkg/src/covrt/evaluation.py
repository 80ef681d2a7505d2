"""Risk and fit metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, Tree


@dataclass(frozen=True)
class EvalResult:
    l2_risk: float
    r_squared: float
    n: int


def empirical_l2_risk(tree: Tree, data: Dataset) -> float:
    """Mean squared residual of the tree on ``data``."""
    if data.n == 0:
        raise ValueError("empty dataset")
    resid = data.response - tree.predict(data.features)
    return float(np.mean(resid * resid))


def response_variance(data: Dataset) -> float:
    y = data.response
    return float(np.mean((y - np.mean(y)) ** 2))


def r_squared(tree: Tree, data: Dataset) -> float:
    """``1 - risk / Var(y)`` with the divide-by-n variance of ``data``'s response."""
    if data.n < 2:
        raise ValueError("R^2 needs at least two rows")
    var = response_variance(data)
    if var == 0.0:
        raise ValueError("R^2 is undefined for a constant response")
    return 1.0 - empirical_l2_risk(tree, data) / var


def evaluate(tree: Tree, data: Dataset) -> EvalResult:
    return EvalResult(empirical_l2_risk(tree, data), r_squared(tree, data), data.n)


def generalization_gap(tree: Tree, train: Dataset, test: Dataset) -> float:
    """Test risk minus training risk."""
    return empirical_l2_risk(tree, test) - empirical_l2_risk(tree, train)
