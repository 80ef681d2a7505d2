"""Depth-limited greedy recursive partitioning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LEAF, CriterionKind, Dataset, NodeRegion, Tree
from .splitting import best_split

# depth cap standing in for "grown to the maximum depth"
FULL_DEPTH = 64


@dataclass(frozen=True)
class GrowConfig:
    criterion: CriterionKind = CriterionKind.COVRT
    max_depth: int = 3
    min_node_size: int = 5
    seed: int = 0
    min_leaf_size: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "criterion", CriterionKind.parse(self.criterion))
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_node_size < 1:
            raise ValueError("min_node_size must be >= 1")
        if self.min_leaf_size < 1:
            raise ValueError("min_leaf_size must be >= 1")


def grow(data: Dataset, config: GrowConfig, rng: np.random.Generator | None = None) -> Tree:
    """Grow a tree level by level up to ``config.max_depth``.

    At each level every terminal node with more than ``min_node_size`` rows
    is split with the best split found by :func:`best_split`; nodes with no
    positive-criterion split stay terminal. Nodes are numbered breadth-first.

    ``rng`` overrides the generator seeded from ``config.seed``; it is only
    consumed by the RANDOM criterion.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    X, y = data.features, data.response

    feature, threshold, left, right = [], [], [], []
    n, mean, risk, depth = [], [], [], []

    def add_node(rows: np.ndarray, d: int) -> int:
        yt = y[rows]
        m = float(np.mean(yt))
        feature.append(LEAF)
        threshold.append(np.nan)
        left.append(LEAF)
        right.append(LEAF)
        n.append(rows.size)
        mean.append(m)
        risk.append(float(np.mean((yt - m) ** 2)))
        depth.append(d)
        return len(n) - 1

    frontier = [(add_node(np.arange(data.n), 0), np.arange(data.n))]
    for level in range(config.max_depth):
        next_frontier = []
        for node_id, rows in frontier:
            if rows.size <= config.min_node_size:
                continue
            decision = best_split(
                data, NodeRegion(rows, level), config.criterion, rng, config.min_leaf_size
            )
            split = decision.best
            if split is None:
                continue
            go_left = X[rows, split.feature] <= split.threshold
            rows_l, rows_r = rows[go_left], rows[~go_left]
            l_id = add_node(rows_l, level + 1)
            r_id = add_node(rows_r, level + 1)
            feature[node_id] = split.feature
            threshold[node_id] = split.threshold
            left[node_id] = l_id
            right[node_id] = r_id
            next_frontier += [(l_id, rows_l), (r_id, rows_r)]
        frontier = next_frontier
        if not frontier:
            break

    return Tree(
        feature=feature,
        threshold=threshold,
        left=left,
        right=right,
        n=n,
        mean=mean,
        risk=risk,
        depth=depth,
        criterion=config.criterion,
        max_depth=config.max_depth,
        min_node_size=config.min_node_size,
        column_names=data.column_names,
    )


def grow_full(
    data: Dataset,
    criterion: CriterionKind | str = CriterionKind.COVRT,
    min_node_size: int = 5,
    seed: int = 0,
    rng: np.random.Generator | None = None,
    min_leaf_size: int = 1,
) -> Tree:
    """Grow until node size or a zero-gain node stops every branch."""
    config = GrowConfig(criterion, FULL_DEPTH, min_node_size, seed, min_leaf_size)
    return grow(data, config, rng)
