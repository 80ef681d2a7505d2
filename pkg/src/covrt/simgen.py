"""Seeded data-generating processes for the simulation studies.

Every generator returns the sampled :class:`Dataset` together with the
noiseless regression function as an :class:`AdditiveFunction`.

Randomness comes from numpy's PCG64 generator. Replication ``r`` of an
experiment with base seed ``seed`` draws from
``SeedSequence(seed, spawn_key=(r, *stream))`` so replications are
independent and reproducible in any order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .data import Dataset
from .theory import AdditiveFunction, ClosedForm, linear


def replication_rng(seed: int, replication: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replication, *stream)))


def uniform_open_left(rng: np.random.Generator, size) -> np.ndarray:
    """Draws from U(0, 1] as ``1 - U[0, 1)``."""
    return 1.0 - rng.random(size)


_MODEL_BETA = (10.0, 8.0, 6.0, 2.0)
_MODEL34_BETA = (6.0, 10.0, 8.0, 4.0)


def _model1(params):
    comps = [linear(b) for b in _MODEL_BETA] + [linear(0.0)] * 6
    return AdditiveFunction(comps), 10, 2.0


def _model2(params):
    comps = [ClosedForm("quadratic", b) for b in _MODEL_BETA] + [linear(0.0)] * 6
    return AdditiveFunction(comps), 10, 2.0


def _model3(params):
    b1, b2, b3, b4 = _MODEL34_BETA
    comps = [
        linear(b1),
        linear(b2),
        ClosedForm("step", b3, cut=0.5),
        ClosedForm("step", b4, cut=0.6),
    ] + [linear(0.0)] * 6
    return AdditiveFunction(comps), 10, 2.0


def _model4(params):
    b1, b2, b3, b4 = _MODEL34_BETA
    comps = [
        ClosedForm("x_above", b1, cut=0.5),
        ClosedForm("sqrt", b2),
        ClosedForm("sin_half_pi", b3),
        ClosedForm("cos_pi", b4),
    ] + [linear(0.0)] * 6
    return AdditiveFunction(comps), 10, 2.0


_HOMOSKEDASTIC = {"model1": _model1, "model2": _model2, "model3": _model3, "model4": _model4}
DGP_NAMES = ("model1", "model2", "model3", "model4", "overfit5", "simple_linear", "cubic1d")
_DEFAULTS: dict[str, dict[str, Any]] = {
    "overfit5": {"beta": 1.0},
    "simple_linear": {"c0": 1.0, "c1": 0.0, "noise_covariates": 0, "noise_sd": 1.0},
}
_REQUIRED: dict[str, tuple[str, ...]] = {"simple_linear": ("c1",)}


@dataclass(frozen=True)
class DgpSpec:
    name: str
    n: int
    seed: int = 0
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.name not in DGP_NAMES:
            raise ValueError(f"unknown data-generating process {self.name!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        missing = [k for k in _REQUIRED.get(self.name, ()) if k not in self.params]
        if missing:
            raise ValueError(f"{self.name} needs parameters {missing}")
        unknown = set(self.params) - set(_DEFAULTS.get(self.name, {}))
        if unknown:
            raise ValueError(f"{self.name} does not take parameters {sorted(unknown)}")

    def param(self, key: str):
        return self.params.get(key, _DEFAULTS[self.name][key])


def generate(spec: DgpSpec, rng: np.random.Generator | None = None) -> tuple[Dataset, AdditiveFunction]:
    """Sample ``spec.n`` rows from the named process.

    ``rng`` replaces the generator seeded from ``spec.seed``.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    n = spec.n

    if spec.name in _HOMOSKEDASTIC:
        g, p, sd = _HOMOSKEDASTIC[spec.name](spec.params)
        X = uniform_open_left(rng, (n, p))
        y = g(X) + sd * rng.standard_normal(n)
    elif spec.name == "overfit5":
        beta = float(spec.param("beta"))
        g = AdditiveFunction([linear(10 * beta), linear(8 * beta), linear(6 * beta),
                              linear(0.0), linear(0.0)])
        X = uniform_open_left(rng, (n, 5))
        y = g(X) + 10.0 * X[:, 2] * rng.standard_normal(n)
    elif spec.name == "simple_linear":
        c0, c1 = float(spec.param("c0")), float(spec.param("c1"))
        extra = int(spec.param("noise_covariates"))
        g = AdditiveFunction([linear(c1)] + [linear(0.0)] * extra, intercept=c0)
        X = uniform_open_left(rng, (n, 1 + extra))
        y = g(X) + float(spec.param("noise_sd")) * rng.standard_normal(n)
    else:  # cubic1d
        g = AdditiveFunction([ClosedForm("cubic", 1.0, -1.0, 1.0)])
        X = 2.0 * uniform_open_left(rng, (n, 1)) - 1.0
        y = X[:, 0] ** 3

    names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
    return Dataset(X, y, names, "y"), g
