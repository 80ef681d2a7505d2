import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covrt import Dataset, DgpSpec, GrowConfig, generate, grow, grow_full
from covrt.data import LEAF
from covrt.io import dumps_tree


def test_depth_zero_is_root_mean():
    data = Dataset(np.arange(6.0)[:, None], np.array([1.0, 2, 3, 4, 5, 9]))
    tree = grow(data, GrowConfig("covrt", 0))
    assert tree.node_count == 1 and tree.mean[0] == 4.0


@pytest.mark.parametrize("kind", ["cart", "covrt"])
def test_stump_on_four_points(four_points, kind):
    tree = grow(four_points, GrowConfig(kind, 1, 1))
    assert (tree.feature[0], tree.threshold[0]) == (0, 2.5)
    assert list(tree.mean[[tree.left[0], tree.right[0]]]) == [0.0, 1.0]


def test_cubic_root_split_near_zero():
    data, _ = generate(DgpSpec("cubic1d", 100_000, seed=0))
    tree = grow(data, GrowConfig("covrt", 1, 5))
    assert abs(tree.threshold[0]) < 0.03


def test_grow_full_purifies_distinct_points():
    data = Dataset(np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([3.0, -1.0, 4.0, 0.5]))
    tree = grow_full(data, "covrt", min_node_size=1)
    assert tree.n_leaves == 4
    assert np.all(tree.risk[tree.is_leaf] == 0.0)


@pytest.mark.parametrize("n_min", [1, 5])
def test_grow_full_constant_response_single_leaf(n_min):
    data = Dataset(np.random.default_rng(0).random((40, 2)), np.full(40, 1.25))
    assert grow_full(data, "cart", n_min).node_count == 1


@pytest.mark.parametrize("kind", ["cart", "covrt"])
def test_grow_full_has_enough_leaves_for_pruning_sweep(kind):
    data, _ = generate(DgpSpec("overfit5", 3000, seed=1))
    assert grow_full(data, kind, 5).n_leaves > 20


def test_split_needs_more_than_min_node_size():
    data = Dataset(np.arange(5.0)[:, None], np.array([0.0, 1, 0, 1, 5]))
    assert grow(data, GrowConfig("cart", 3, 5)).node_count == 1
    assert grow(data, GrowConfig("cart", 3, 4)).node_count > 1


def test_config_validation():
    with pytest.raises(ValueError):
        GrowConfig(max_depth=-1)
    with pytest.raises(ValueError):
        GrowConfig(min_node_size=0)


def _sample(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.random((n, 3))
    return Dataset(X, 5 * X[:, 0] + np.sin(6 * X[:, 1]) + rng.normal(size=n))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 120),
       kind=st.sampled_from(["cart", "covrt"]), n_min=st.integers(1, 6))
def test_risk_monotone_and_leaf_bound(seed, n, kind, n_min):
    data = _sample(seed, n)
    risks = []
    for K in range(7):
        tree = grow(data, GrowConfig(kind, K, n_min))
        assert tree.n_leaves <= min(2**K, n)
        assert tree.actual_depth <= K
        resid = data.response - tree.predict(data.features)
        risks.append(float(np.mean(resid**2)))
    assert all(b <= a * (1 + 1e-12) + 1e-15 for a, b in zip(risks, risks[1:]))


@pytest.mark.parametrize("kind", ["cart", "covrt", "random"])
def test_growth_is_deterministic(kind):
    data = _sample(4, 200)
    config = GrowConfig(kind, 6, 3, seed=17)
    assert dumps_tree(grow(data, config)) == dumps_tree(grow(data, config))


def test_nodes_numbered_breadth_first():
    tree = grow(_sample(5, 300), GrowConfig("covrt", 5, 2))
    assert np.all(np.diff(tree.depth) >= 0)
    internal = np.flatnonzero(tree.left != LEAF)
    assert np.all(tree.right[internal] == tree.left[internal] + 1)


def test_cubic_root_split_is_cube_root_of_sample_mean():
    # the empirical deviation function vanishes where s**3 equals the sample mean of y
    for seed in range(5):
        data, _ = generate(DgpSpec("cubic1d", 100_000, seed=seed))
        tree = grow(data, GrowConfig("covrt", 1, 5))
        assert tree.threshold[0] == pytest.approx(np.cbrt(data.response.mean()), abs=2e-3)
