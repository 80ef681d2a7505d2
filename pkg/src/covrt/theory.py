"""Executable checks of the covariance-squared criterion's mathematics.

Covers the total-variation norm of additive functions, the closed-form
population criterion for linear components, the within-node excess-risk
lemma, the global empirical risk bound, the inner-product representation
of the criterion, and split-point convergence for depth-1 trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import CriterionKind, Dataset, NodeRegion, Tree
from .grower import GrowConfig, grow
from .splitting import best_split, ig_cs_identity_check

# ---------------------------------------------------------------------------
# additive functions and total variation


class Component:
    """Univariate component of an additive function."""

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def total_variation(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class PiecewiseLinear(Component):
    knots: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        k = np.asarray(self.knots, dtype=float)
        if k.size != len(self.values) or k.size < 1:
            raise ValueError("knots and values must be non-empty and of equal length")
        if np.any(np.diff(k) <= 0):
            raise ValueError("knots must be strictly increasing")

    def __call__(self, x):
        return np.interp(x, self.knots, self.values)

    def total_variation(self) -> float:
        return float(np.sum(np.abs(np.diff(self.values))))


_SMOOTH_FORMS = {
    # name: (function, critical points within [a, b])
    "linear": (lambda x: x, lambda a, b: []),
    "quadratic": (lambda x: x * x, lambda a, b: [0.0]),
    "cubic": (lambda x: x**3, lambda a, b: []),
    "sqrt": (np.sqrt, lambda a, b: []),
    "sin_half_pi": (
        lambda x: np.sin(0.5 * np.pi * x),
        lambda a, b: [1.0 + 2.0 * k for k in range(math.floor((a - 1) / 2), math.ceil((b - 1) / 2) + 1)],
    ),
    "cos_pi": (
        lambda x: np.cos(np.pi * x),
        lambda a, b: [float(k) for k in range(math.floor(a), math.ceil(b) + 1)],
    ),
}
_JUMP_FORMS = ("step", "x_above")
FORMS = tuple(_SMOOTH_FORMS) + _JUMP_FORMS


@dataclass(frozen=True)
class ClosedForm(Component):
    """``beta * h(x)`` on the domain ``(a, b]`` for a named shape ``h``.

    ``step`` is ``1{x > cut}`` and ``x_above`` is ``x * 1{x > cut}``.
    """

    form: str
    beta: float = 1.0
    a: float = 0.0
    b: float = 1.0
    cut: float = 0.5

    def __post_init__(self) -> None:
        if self.form not in FORMS:
            raise ValueError(f"unknown closed form {self.form!r}")
        if not self.a < self.b:
            raise ValueError("domain must satisfy a < b")
        if self.form == "sqrt" and self.a < 0:
            raise ValueError("sqrt needs a non-negative domain")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.form == "step":
            return self.beta * (x > self.cut)
        if self.form == "x_above":
            return self.beta * x * (x > self.cut)
        return self.beta * _SMOOTH_FORMS[self.form][0](x)

    def total_variation(self) -> float:
        a, b, beta = self.a, self.b, abs(self.beta)
        if beta == 0.0:
            return 0.0
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError(f"{self.form} has unbounded variation on ({a}, {b}]")
        if self.form == "step":
            return beta if a < self.cut < b else 0.0
        if self.form == "x_above":
            c = self.cut
            if c >= b:
                return 0.0
            if c <= a:
                return beta * (b - a)
            return beta * abs(c) + beta * (b - c)
        h, crit = _SMOOTH_FORMS[self.form]
        pts = np.array(sorted({a, b, *(c for c in crit(a, b) if a < c < b)}))
        return beta * float(np.sum(np.abs(np.diff(h(pts)))))


def linear(beta: float, a: float = 0.0, b: float = 1.0) -> ClosedForm:
    return ClosedForm("linear", beta, a, b)


@dataclass(frozen=True)
class AdditiveFunction:
    """``intercept + sum_j g_j(x_j)`` with one component per column."""

    components: tuple[Component, ...]
    intercept: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def p(self) -> int:
        return len(self.components)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.p:
            raise ValueError(f"expected {self.p} columns, got {X.shape[1]}")
        out = np.full(X.shape[0], float(self.intercept))
        for j, g in enumerate(self.components):
            out += g(X[:, j])
        return out


def tv_norm(f: AdditiveFunction) -> float:
    """Sum of the component total variations of the given decomposition.

    This upper-bounds the infimum over all decompositions, so any bound
    checked with it is implied by the sharper one.
    """
    return float(sum(g.total_variation() for g in f.components))


# ---------------------------------------------------------------------------
# population criterion for a linear component


def population_cs_linear(beta: float, a: float, b: float, s: float) -> float:
    """Population covariance-squared of ``1{x <= s}`` and ``beta * x``, x ~ U(a, b].

    ``((1/(b-a)) * integral_a^s beta * (x - (a+b)/2) dx)**2``, maximised at the
    midpoint with value ``beta**2 * (b-a)**2 / 64``.
    """
    if not b > a:
        raise ValueError("degenerate interval")
    if not a < s <= b:
        raise ValueError("split point must lie in (a, b]")
    integral = beta * (s - a) * (s - b) / 2.0
    return (integral / (b - a)) ** 2


# ---------------------------------------------------------------------------
# check reports


@dataclass(frozen=True)
class CheckRow:
    check: str
    instance: str
    lhs: float
    rhs: float
    margin: float
    passed: bool


@dataclass
class CheckReport:
    check: str
    rows: list[CheckRow] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def add(self, instance, lhs, rhs, margin, passed) -> None:
        self.rows.append(
            CheckRow(self.check, str(instance), float(lhs), float(rhs), float(margin), bool(passed))
        )

    def extend(self, other: "CheckReport") -> None:
        self.rows.extend(other.rows)
        self.notes.extend(other.notes)

    @property
    def violations(self) -> int:
        return sum(not r.passed for r in self.rows)

    @property
    def ok(self) -> bool:
        return self.violations == 0


# ---------------------------------------------------------------------------
# node-level identities


def check_prop1(data: Dataset, region: NodeRegion, j: int, s: float) -> float:
    """``|<y - ybar, Phi>_t|**2 - CS(j, s, t)`` with ``Phi = N_R/N_t - 1{x_j > s}``.

    The inner product is the node average of the product.
    """
    rows = region.row_indices
    x = data.features[rows, j]
    y = data.response[rows]
    right = x > s
    n_r = int(right.sum())
    if n_r == 0 or n_r == rows.size:
        raise ValueError(f"split (feature={j}, threshold={s}) leaves a daughter empty")
    phi = n_r / rows.size - right.astype(float)
    inner = np.mean((y - np.mean(y)) * phi)
    _, cs, _ = ig_cs_identity_check(data, region, j, s)
    return float(inner * inner - cs)


def _relative(residual: float, scale: float) -> float:
    return abs(residual) / scale if scale > 0 else abs(residual)


def fuzz_nodes(n_nodes: int, seed: int, max_rows: int = 50, max_features: int = 5):
    """Random nodes with a random valid split: ``(data, region, j, s)``.

    Mixes continuous, integer-valued and constant responses and feature
    columns with repeated values.
    """
    rng = np.random.default_rng(seed)
    made = 0
    while made < n_nodes:
        n = int(rng.integers(2, max_rows + 1))
        p = int(rng.integers(1, max_features + 1))
        X = rng.random((n, p))
        ties = rng.random(p) < 0.3
        X[:, ties] = np.round(X[:, ties] * 4) / 4
        kind = rng.integers(3)
        if kind == 0:
            y = rng.normal(0, 10 ** rng.uniform(-2, 2), n)
        elif kind == 1:
            y = rng.integers(-5, 6, n).astype(float)
        else:
            y = np.full(n, rng.normal())
        j = int(rng.integers(p))
        values = np.unique(X[:, j])
        if values.size < 2:
            continue
        k = int(rng.integers(values.size - 1))
        s = (values[k] + values[k + 1]) / 2.0
        made += 1
        yield Dataset(X, y), NodeRegion(np.arange(n)), j, s


def identity_suite(n_nodes: int = 1000, seed: int = 0, rtol: float = 1e-12) -> CheckReport:
    """Inner-product and IG = CS / (P_L P_R) identities over fuzzed nodes.

    Residuals are relative to the node's mean squared response, the
    magnitude that sets floating-point error in both sides.
    """
    report = CheckReport("identity")
    for i, (data, region, j, s) in enumerate(fuzz_nodes(n_nodes, seed)):
        y = data.response
        scale = float(np.mean(y * y))
        r_prop = _relative(check_prop1(data, region, j, s), scale * scale)
        ig, cs, r_ig = ig_cs_identity_check(data, region, j, s)
        r_ig = _relative(r_ig, scale)
        report.add(f"prop1/{i}", r_prop, rtol, rtol - r_prop, r_prop <= rtol)
        report.add(f"ig-identity/{i}", r_ig, rtol, rtol - r_ig, r_ig <= rtol)
    return report


# ---------------------------------------------------------------------------
# excess-risk lemma and empirical risk bound


def _node_cs(data: Dataset, rows: np.ndarray) -> float:
    if rows.size < 2:
        return 0.0
    best = best_split(data, NodeRegion(rows), CriterionKind.COVRT).best
    return 0.0 if best is None else best.criterion_value


def check_lemma1(
    tree: Tree, data: Dataset, g: AdditiveFunction, atol: float = 1e-10, label: str = ""
) -> CheckReport:
    """Node-wise lower bound on the best covariance-squared criterion.

    For every terminal node ``t`` of ``tree`` whose mean has larger
    within-node risk than ``g``, checks
    ``CS(t) >= (R_t(tree) - R_t(g))**2 / (4 * TV(g)**2)``.
    """
    report = CheckReport("lemma1")
    tv = tv_norm(g)
    leaf_of = tree.apply(data.features)
    g_resid = (data.response - g(data.features)) ** 2
    order = np.argsort(leaf_of, kind="stable")
    leaves, starts = np.unique(leaf_of[order], return_index=True)
    for leaf, rows in zip(leaves, np.split(order, starts[1:])):
        y = data.response[rows]
        r_tree = float(np.mean((y - y.mean()) ** 2))
        r_g = float(np.mean(g_resid[rows]))
        excess = r_tree - r_g
        # rounding-level excess is no excess
        if excess <= atol:
            continue
        instance = f"{label}node{leaf}"
        if tv == 0.0:
            report.add(instance + "/degenerate-tv0", 0.0, excess, -excess, False)
            report.notes.append(f"{instance}: positive excess risk with zero total variation")
            continue
        cs = _node_cs(data, rows)
        bound = excess * excess / (4.0 * tv * tv)
        report.add(instance, cs, bound, cs - bound, cs - bound >= -atol)
    return report


def check_thm3(
    data: Dataset, g: AdditiveFunction, K: int, min_node_size: int = 1, label: str = ""
) -> CheckReport:
    """``R(tree_K) <= R(g) + TV(g)**2 / (K + 3)`` for the depth-K covariance tree."""
    if K < 1:
        raise ValueError("the empirical risk bound needs K >= 1")
    tree = grow(data, GrowConfig(CriterionKind.COVRT, K, min_node_size))
    report = CheckReport("thm3")
    r_tree = float(np.mean((data.response - tree.predict(data.features)) ** 2))
    r_g = float(np.mean((data.response - g(data.features)) ** 2))
    rhs = r_g + tv_norm(g) ** 2 / (K + 3)
    report.add(f"{label}K{K}", r_tree, rhs, rhs - r_tree, r_tree <= rhs)
    return report


# ---------------------------------------------------------------------------
# split-point behaviour of depth-1 trees


def depth1_split(X: np.ndarray, y: np.ndarray, criterion=CriterionKind.COVRT, rng=None):
    """Feature, threshold and criterion value of the root split (``None`` if none)."""
    data = Dataset(X, y)
    best = best_split(data, NodeRegion.root(data), criterion, rng).best
    return best


def check_thm1(
    beta: float = 1.0, n: int = 100_000, seed: int = 0, noise_sd: float = 0.0,
    rtol: float = 0.05, s_tol: float = 0.02,
) -> CheckReport:
    """Root split of y = beta * x (+ noise), x ~ U(0, 1]: value near beta**2/64, split near 1/2."""
    report = CheckReport("thm1")
    rng = np.random.default_rng(seed)
    x = 1.0 - rng.random(n)
    y = beta * x + noise_sd * rng.standard_normal(n)
    best = depth1_split(x[:, None], y)
    target = beta * beta / 64.0
    value = 0.0 if best is None else best.criterion_value
    rel = abs(value - target) / target
    report.add(f"max_cs/n{n}", value, target, rtol - rel, rel <= rtol)
    s_hat = np.nan if best is None else best.threshold
    dev = abs(s_hat - 0.5)
    report.add(f"split_point/n{n}", s_hat, 0.5, s_tol - dev, dev <= s_tol)
    return report


def thm2_split_points(beta: float, n: int, reps: int, seed: int, noise_sd: float = 1.0) -> np.ndarray:
    out = np.empty(reps)
    for r in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n, r)))
        x = 1.0 - rng.random(n)
        y = beta * x + noise_sd * rng.standard_normal(n)
        best = depth1_split(x[:, None], y)
        out[r] = np.nan if best is None else best.threshold
    return out


def check_thm2_convergence(
    beta: float = 1.0,
    sample_sizes: Sequence[int] = (100, 1000, 10_000),
    reps: int = 200,
    seed: int = 0,
    noise_sd: float = 1.0,
    final_tol: float = 0.05,
) -> CheckReport:
    """Median |s_hat - 1/2| of depth-1 covariance trees shrinks as N grows."""
    report = CheckReport("thm2")
    if beta == 0.0:
        report.notes.append("assumption violated: beta = 0 gives no unique maximiser")
        return report
    previous = math.inf
    for n in sample_sizes:
        s = thm2_split_points(beta, n, reps, seed, noise_sd)
        med = float(np.nanmedian(np.abs(s - 0.5)))
        report.add(f"median_dev/n{n}", med, previous, previous - med, med <= previous)
        previous = med
    if max(sample_sizes) >= 10_000:
        report.add(f"final/n{max(sample_sizes)}", previous, final_tol, final_tol - previous,
                   previous < final_tol)
    return report
