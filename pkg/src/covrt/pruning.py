"""Weakest-link cost-complexity pruning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LEAF, Dataset, Tree


@dataclass(frozen=True)
class PruneStep:
    critical_alpha: float
    collapsed_node_id: int
    leaves_after: int
    train_risk_after: float
    # further nodes tied with collapsed_node_id and collapsed in the same step
    also_collapsed: tuple[int, ...] = ()

    @property
    def collapsed_node_ids(self) -> tuple[int, ...]:
        return (self.collapsed_node_id,) + self.also_collapsed


@dataclass(frozen=True)
class PruneSequence:
    """Nested subtrees obtained by collapsing one weakest link at a time.

    Subtree ``i`` (``i = 0`` is the unpruned tree) collapses the first ``i``
    nodes of :attr:`steps`. Node ids refer to the unpruned tree.
    """

    steps: tuple[PruneStep, ...]
    initial_leaves: int
    initial_train_risk: float

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([s.critical_alpha for s in self.steps])

    @property
    def leaf_counts(self) -> np.ndarray:
        """Leaf count of every subtree, unpruned first."""
        return np.array([self.initial_leaves] + [s.leaves_after for s in self.steps])

    @property
    def train_risks(self) -> np.ndarray:
        return np.array([self.initial_train_risk] + [s.train_risk_after for s in self.steps])

    def collapsed(self, index: int) -> list[int]:
        return [t for s in self.steps[:index] for t in s.collapsed_node_ids]

    def subtree(self, tree: Tree, index: int) -> Tree:
        return tree.subtree(self.collapsed(index))


class _BranchSums:
    """Per-node sums of an additive leaf statistic over the current branch."""

    def __init__(self, tree: Tree, node_value: np.ndarray):
        self.parent = tree.parents()
        self.node_value = np.asarray(node_value, dtype=np.float64)
        self.branch = np.zeros(tree.node_count)
        self.leaves = np.zeros(tree.node_count, dtype=np.intp)
        # children always carry larger ids than their parent (breadth-first)
        for i in range(tree.node_count - 1, -1, -1):
            if tree.left[i] == LEAF:
                self.branch[i] = self.node_value[i]
                self.leaves[i] = 1
            else:
                l, r = tree.left[i], tree.right[i]
                self.branch[i] = self.branch[l] + self.branch[r]
                self.leaves[i] = self.leaves[l] + self.leaves[r]

    def collapse(self, t: int) -> None:
        d_value = self.node_value[t] - self.branch[t]
        d_leaves = self.leaves[t] - 1
        a = t
        while a != LEAF:
            self.branch[a] += d_value
            self.leaves[a] -= d_leaves
            a = self.parent[a]


def _check_bfs_order(tree: Tree) -> None:
    internal = ~tree.is_leaf
    ids = np.flatnonzero(internal)
    if np.any(tree.left[ids] <= ids) or np.any(tree.right[ids] <= ids):
        raise ValueError("tree nodes must be numbered parents-before-children")


def prune_sequence(tree: Tree, data: Dataset | None = None) -> PruneSequence:
    """Weakest-link sequence of a grown tree.

    Repeatedly collapses the internal node ``t`` minimising
    ``(R(t) - R(T_t)) / (|T_t| - 1)``, where ``R`` is the N-weighted training
    risk (node risk times ``N_t / N``) and ``T_t`` the current branch at ``t``.
    Ties go to the smallest node id. Critical alphas are made non-decreasing
    against rounding by a running maximum.

    ``data`` is only used to check that the tree was grown on it.
    """
    _check_bfs_order(tree)
    if data is not None and data.n != tree.n[0]:
        raise ValueError("tree root size does not match the dataset")
    total = float(tree.n[0])
    node_risk = tree.risk * tree.n / total
    sums = _BranchSums(tree, node_risk)
    active = ~tree.is_leaf
    steps: list[PruneStep] = []
    alpha_floor = 0.0
    while active.any():
        ids = np.flatnonzero(active)
        g = (node_risk[ids] - sums.branch[ids]) / (sums.leaves[ids] - 1)
        g_min = g.min()
        alpha = max(float(g_min), alpha_floor)
        alpha_floor = alpha
        done = []
        for t in ids[g == g_min]:
            t = int(t)
            # a tied ancestor already collapsed this node
            if not active[t]:
                continue
            sums.collapse(t)
            done.append(t)
            stack = [t]
            while stack:
                i = stack.pop()
                if active[i]:
                    active[i] = False
                    stack.extend((int(tree.left[i]), int(tree.right[i])))
        steps.append(PruneStep(alpha, done[0], int(sums.leaves[0]), float(sums.branch[0]),
                               tuple(done[1:])))
    return PruneSequence(
        tuple(steps),
        tree.n_leaves,
        float(np.sum(node_risk[tree.is_leaf])),
    )


def prune_to_leaves(
    tree: Tree, data: Dataset | None, leaves: int, sequence: PruneSequence | None = None
) -> Tree:
    """Largest subtree in the weakest-link sequence with at most ``leaves`` leaves."""
    if leaves < 1:
        raise ValueError("leaves must be >= 1")
    if sequence is None:
        sequence = prune_sequence(tree, data)
    counts = sequence.leaf_counts
    index = int(np.argmax(counts <= leaves))
    return sequence.subtree(tree, index)


def sequence_node_sums(tree: Tree, sequence: PruneSequence, node_value: np.ndarray) -> np.ndarray:
    """Sum of an additive per-node statistic over the leaves of every subtree.

    Entry ``i`` belongs to subtree ``i`` of the sequence (unpruned first).
    """
    sums = _BranchSums(tree, node_value)
    out = [sums.branch[0]]
    for step in sequence.steps:
        for t in step.collapsed_node_ids:
            sums.collapse(t)
        out.append(sums.branch[0])
    return np.array(out)


def node_sse(tree: Tree, data: Dataset) -> np.ndarray:
    """Squared error of every node's mean over the rows of ``data`` passing through it."""
    rows, nodes = tree.decision_path(data.features)
    resid = data.response[rows] - tree.mean[nodes]
    return np.bincount(nodes, weights=resid * resid, minlength=tree.node_count)


def interval_alpha(sequence: PruneSequence, index: int) -> float:
    """Representative alpha of subtree ``index``: geometric mean of its interval."""
    alphas = sequence.alphas
    if alphas.size == 0:
        return 0.0
    lo = 0.0 if index == 0 else alphas[index - 1]
    hi = alphas[index] if index < alphas.size else 10.0 * alphas[-1]
    return float(np.sqrt(lo * hi))


def select_alpha(
    tree: Tree,
    train: Dataset | None,
    validation: Dataset,
    sequence: PruneSequence | None = None,
    rtol: float = 1e-12,
) -> tuple[float, Tree]:
    """Subtree of the sequence with the smallest validation L2 risk.

    Validation risks within ``rtol`` of the minimum count as ties and go to
    the subtree with fewer leaves.
    """
    if validation.n == 0:
        raise ValueError("empty validation set")
    if sequence is None:
        sequence = prune_sequence(tree, train)
    risks = sequence_node_sums(tree, sequence, node_sse(tree, validation)) / validation.n
    best = risks.min()
    index = int(np.flatnonzero(risks <= best + rtol * abs(best))[-1])
    return interval_alpha(sequence, index), sequence.subtree(tree, index)


def validation_risks(tree: Tree, sequence: PruneSequence, validation: Dataset) -> np.ndarray:
    return sequence_node_sums(tree, sequence, node_sse(tree, validation)) / validation.n
