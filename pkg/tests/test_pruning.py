import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covrt import Dataset, DgpSpec, GrowConfig, generate, grow, grow_full
from covrt import prune_sequence, prune_to_leaves, select_alpha
from covrt.data import LEAF
from covrt.evaluation import empirical_l2_risk
from covrt.pruning import validation_risks
from covrt.simgen import replication_rng


@pytest.fixture
def fitted_stump(four_points):
    return grow(four_points, GrowConfig("cart", 1, 1))


def test_stump_sequence(fitted_stump, four_points):
    seq = prune_sequence(fitted_stump, four_points)
    assert len(seq) == 1
    step = seq.steps[0]
    assert (step.critical_alpha, step.leaves_after, step.train_risk_after) == (0.25, 1, 0.25)


def test_root_only_sequence_is_empty(four_points):
    assert len(prune_sequence(grow(four_points, GrowConfig("cart", 0)), four_points)) == 0


def test_prune_to_leaves_examples(fitted_stump, four_points):
    same = prune_to_leaves(fitted_stump, four_points, 2)
    assert same.structurally_equal(fitted_stump)
    root = prune_to_leaves(fitted_stump, four_points, 1)
    assert root.node_count == 1 and root.mean[0] == 0.5
    with pytest.raises(ValueError):
        prune_to_leaves(fitted_stump, four_points, 0)


def _noisy(seed, n=200, p=3):
    rng = np.random.default_rng(seed)
    X = rng.random((n, p))
    return Dataset(X, 4 * X[:, 0] - 3 * (X[:, 1] > 0.3) + rng.normal(size=n))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), kind=st.sampled_from(["cart", "covrt"]))
def test_sequence_invariants(seed, kind):
    data = _noisy(seed)
    tree = grow_full(data, kind, 3)
    seq = prune_sequence(tree, data)
    if tree.n_leaves == 1:
        assert len(seq) == 0
        return
    assert np.all(np.diff(seq.alphas) >= 0)
    counts = seq.leaf_counts
    assert np.all(np.diff(counts) < 0) and counts[-1] == 1
    risks = seq.train_risks
    assert np.all(np.diff(risks) >= -1e-12 * risks[-1])
    np.testing.assert_allclose(risks[-1], tree.risk[0], rtol=1e-12)
    # nested: every subtree's nodes are a subset of the previous one's kept nodes
    prev = None
    for i in range(len(seq) + 1):
        sub = seq.subtree(tree, i)
        assert sub.n_leaves == counts[i]
        np.testing.assert_allclose(empirical_l2_risk(sub, data), risks[i], rtol=1e-10, atol=1e-14)
        collapsed = set(seq.collapsed(i))
        if prev is not None:
            assert prev <= collapsed
        prev = collapsed
    # pruning to k leaves never lowers training risk as k shrinks
    by_k = [empirical_l2_risk(prune_to_leaves(tree, data, k, seq), data)
            for k in range(1, tree.n_leaves + 1)]
    assert all(b <= a + 1e-12 for a, b in zip(by_k, by_k[1:]))


def _all_pruned_subtrees(tree):
    """Every collapse-closed subtree as (leaf count, N-weighted training risk)."""
    total = tree.n[0]

    def options(i):
        own = (1, tree.risk[i] * tree.n[i] / total)
        if tree.left[i] == LEAF:
            return [own]
        out = [own]
        for (la, ra), (lb, rb) in itertools.product(options(tree.left[i]), options(tree.right[i])):
            out.append((la + lb, ra + rb))
        return out

    return options(0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(4, 40))
def test_sequence_contains_penalized_optimum_on_small_trees(seed, n):
    rng = np.random.default_rng(seed)
    data = Dataset(rng.random((n, 2)), rng.normal(size=n) + 3 * (rng.random(n) > 0.5))
    tree = grow(data, GrowConfig("cart", 3, 1))
    if tree.node_count > 10:
        tree = tree.truncate(2)
    seq = prune_sequence(tree, data)
    candidates = _all_pruned_subtrees(tree)
    in_sequence = list(zip(seq.leaf_counts, seq.train_risks))
    alphas = np.concatenate([[0.0], seq.alphas, seq.alphas * 1.0001 + 1e-9,
                             np.linspace(0, 2 * (seq.alphas.max() if len(seq) else 1), 25)])
    for a in alphas:
        best = min(r + a * k for k, r in candidates)
        found = min(r + a * k for k, r in in_sequence)
        assert found <= best + 1e-12 * max(1.0, abs(best))


def test_tied_links_collapse_together():
    X = np.arange(1.0, 9.0)[:, None]
    data = Dataset(X, np.array([0.0, 1, 0, 1, 10, 11, 10, 11]))
    tree = grow_full(data, "covrt", 1)
    seq = prune_sequence(tree, data)
    assert list(seq.leaf_counts) == [8, 2, 1]
    assert seq.steps[0].collapsed_node_ids == (1, 2)


def test_select_alpha_keeps_perfect_fit():
    data = Dataset(np.arange(8.0)[:, None], np.array([0.0, 3, 1, 4, 1, 5, 9, 2]))
    tree = grow_full(data, "cart", 1)
    alpha, chosen = select_alpha(tree, data, data)
    assert chosen.structurally_equal(tree) and alpha >= 0


def test_select_alpha_minimizes_validation_risk():
    train, val = _noisy(1), _noisy(2)
    tree = grow_full(train, "covrt", 5)
    seq = prune_sequence(tree, train)
    _, chosen = select_alpha(tree, train, val, seq)
    risks = validation_risks(tree, seq, val)
    direct = [empirical_l2_risk(seq.subtree(tree, i), val) for i in range(len(seq) + 1)]
    np.testing.assert_allclose(risks, direct, rtol=1e-10)
    assert empirical_l2_risk(chosen, val) == pytest.approx(min(direct), rel=1e-10)


def test_select_alpha_on_pure_noise_picks_root():
    leaves = []
    for r in range(500):
        rng = replication_rng(123, r)
        train, _ = generate(DgpSpec("simple_linear", 200, params={"c1": 0.0}), rng)
        val, _ = generate(DgpSpec("simple_linear", 200, params={"c1": 0.0}), rng)
        tree = grow_full(train, "covrt", 5)
        leaves.append(select_alpha(tree, train, val)[1].n_leaves)
    assert np.median(leaves) == 1


def test_select_alpha_rejects_empty_validation(fitted_stump, four_points):
    with pytest.raises(ValueError):
        select_alpha(fitted_stump, four_points, four_points.subset(np.array([], dtype=int)))
