import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from covrt import Dataset, DgpSpec, GrowConfig, NodeRegion, generate, grow
from covrt.theory import (
    AdditiveFunction, ClosedForm, PiecewiseLinear, check_lemma1, check_prop1, check_thm1,
    check_thm2_convergence, check_thm3, identity_suite, linear, population_cs_linear, tv_norm,
)


@pytest.mark.parametrize(
    "component, tv",
    [
        (linear(1.0), 1.0),
        (ClosedForm("cubic", 1.0, -1.0, 1.0), 2.0),
        (ClosedForm("cos_pi", 1.0), 2.0),
        (ClosedForm("sin_half_pi", 8.0), 8.0),
        (ClosedForm("sqrt", 10.0), 10.0),
        (ClosedForm("quadratic", 1.0, -1.0, 1.0), 2.0),
        (ClosedForm("step", 4.0, cut=0.6), 4.0),
        (ClosedForm("x_above", 6.0, cut=0.5), 6.0),
        (PiecewiseLinear((0.0, 0.5, 1.0), (0.0, 2.0, -1.0)), 5.0),
    ],
)
def test_component_total_variation(component, tv):
    assert component.total_variation() == pytest.approx(tv, rel=1e-12)


@pytest.mark.parametrize("form, beta", [("sin_half_pi", 1.0), ("cos_pi", -2.0), ("quadratic", 3.0)])
def test_analytic_tv_matches_fine_grid(form, beta):
    g = ClosedForm(form, beta, -1.5, 2.0)
    x = np.linspace(-1.5, 2.0, 200_001)
    assert g.total_variation() == pytest.approx(np.abs(np.diff(g(x))).sum(), rel=1e-8)


@pytest.mark.parametrize("model, tv", [("model1", 26.0), ("model2", 26.0), ("model3", 28.0), ("model4", 32.0)])
def test_model_tv_norms(model, tv):
    _, g = generate(DgpSpec(model, 1))
    assert tv_norm(g) == pytest.approx(tv, rel=1e-12)


def test_unbounded_variation_rejected():
    with pytest.raises(ValueError):
        linear(1.0, 0.0, np.inf).total_variation()
    with pytest.raises(ValueError):
        PiecewiseLinear((0.0, 0.0), (1.0, 2.0))


def test_population_cs_examples():
    assert population_cs_linear(1.0, 0.0, 1.0, 0.5) == 1 / 64
    assert population_cs_linear(0.0, 0.0, 1.0, 0.3) == 0.0
    assert population_cs_linear(2.0, 0.0, 1.0, 0.25) == pytest.approx(0.03515625, rel=1e-14)
    with pytest.raises(ValueError):
        population_cs_linear(1.0, 1.0, 1.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(beta=st.floats(-5, 5), a=st.floats(-3, 3), width=st.floats(0.1, 4), frac=st.floats(0.01, 1))
def test_population_cs_matches_quadrature(beta, a, width, frac):
    b = a + width
    s = a + frac * width
    integral, _ = quad(lambda x: beta * (x - (a + b) / 2), a, s, epsabs=1e-12)
    assert population_cs_linear(beta, a, b, s) == pytest.approx((integral / width) ** 2, rel=1e-8, abs=1e-14)


def test_population_cs_maximized_at_midpoint():
    a, b = -0.5, 2.5
    grid = np.linspace(a, b, 1001)[1:]
    values = [population_cs_linear(1.7, a, b, s) for s in grid]
    step = grid[1] - grid[0]
    assert abs(grid[int(np.argmax(values))] - (a + b) / 2) <= step
    assert max(values) == pytest.approx(1.7**2 * (b - a) ** 2 / 64, rel=1e-5)


def test_prop1_examples():
    data = Dataset(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]))
    assert check_prop1(data, NodeRegion.root(data), 0, 0.5) == 0.0
    flat = Dataset(np.array([[0.0], [1.0], [2.0]]), np.array([3.0, 3.0, 3.0]))
    assert check_prop1(flat, NodeRegion.root(flat), 0, 0.5) == 0.0
    with pytest.raises(ValueError):
        check_prop1(flat, NodeRegion.root(flat), 0, 5.0)


def test_identity_suite_clean():
    report = identity_suite(300, seed=4)
    assert report.ok and len(report.rows) == 600


def test_lemma1_hand_example():
    data = Dataset(np.array([[1.0], [2.0]]), np.array([0.0, 1.0]))
    g = AdditiveFunction([linear(1.0, 1.0, 2.0)], intercept=-1.0)
    root = grow(data, GrowConfig("covrt", 0))
    report = check_lemma1(root, data, g)
    (row,) = report.rows
    assert (row.lhs, row.rhs) == (0.0625, 0.015625) and row.passed


def test_lemma1_vacuous_for_node_mean():
    data, _ = generate(DgpSpec("model1", 200, seed=1))
    root = grow(data, GrowConfig("covrt", 0))
    g = AdditiveFunction([linear(0.0)] * data.p, intercept=float(root.mean[0]))
    assert check_lemma1(root, data, g).rows == []


def test_lemma1_vacuous_when_g_is_the_tree():
    data, _ = generate(DgpSpec("model1", 200, seed=1))
    tree = grow(data, GrowConfig("covrt", 2, 1))
    # leaf-mean function as a piecewise-constant g has no excess at any leaf
    leaf = tree.apply(data.features)
    own = AdditiveFunction([linear(0.0)] * data.p)
    shifted = Dataset(data.features, data.response - tree.mean[leaf] + own(data.features))
    assert check_lemma1(tree, shifted, own).ok


@pytest.mark.parametrize("model", ["model1", "model2", "model3", "model4"])
def test_lemma1_and_thm3_on_models(model):
    for seed in range(5):
        data, g = generate(DgpSpec(model, 300, seed=seed))
        deep = grow(data, GrowConfig("covrt", 5, 1))
        for K in range(1, 7):
            assert check_lemma1(deep.truncate(K - 1), data, g).ok
            assert check_thm3(data, g, K).ok


def test_thm3_constant_g_and_k0():
    data, _ = generate(DgpSpec("model1", 100, seed=2))
    const = AdditiveFunction([linear(0.0)] * data.p, intercept=float(data.response.mean()))
    for K in (1, 3):
        assert check_thm3(data, const, K).ok
    with pytest.raises(ValueError):
        check_thm3(data, const, 0)


def test_thm1_noiseless():
    report = check_thm1(1.0, 100_000, seed=3)
    assert report.ok


def test_thm2_noiseless_large_n():
    report = check_thm2_convergence(1.0, (100_000,), reps=5, noise_sd=0.0, final_tol=0.01)
    assert report.ok


def test_thm2_zero_beta_reports_assumption():
    report = check_thm2_convergence(0.0)
    assert report.rows == [] and any("assumption violated" in n for n in report.notes)
