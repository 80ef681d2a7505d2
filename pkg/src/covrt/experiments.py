"""Experiment pipelines for the simulation tables, figure data and check suites.

Every pipeline draws replication ``r`` from its own seed stream (see
:func:`covrt.simgen.replication_rng`), so results do not depend on the
number of worker processes. Raw per-replication rows are always kept;
means over replications are appended at emission time with
``replication = -1``.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import theory
from .data import CriterionKind, Dataset, DataError, NodeRegion
from .evaluation import empirical_l2_risk, r_squared
from .grower import GrowConfig, grow, grow_full
from .io import load_csv, split_dataset, write_rows
from .pruning import node_sse, prune_sequence, select_alpha, sequence_node_sums
from .simgen import DgpSpec, generate, replication_rng
from .splitting import best_split

REPORT_COLUMNS = (
    "experiment", "model", "method", "depth_or_leaves", "metric", "value", "replication", "seed",
)
CHECK_COLUMNS = ("check", "instance", "lhs", "rhs", "margin", "pass")
CRITERIA = (CriterionKind.COVRT, CriterionKind.CART)
SPLITTERS = (CriterionKind.RANDOM, CriterionKind.CART, CriterionKind.COVRT)
# Minimum daughter size used by the published experiments' tree growth.
PROTOCOL_MIN_LEAF = 5


@dataclass(frozen=True, order=True)
class ReportRow:
    experiment: str
    model: str
    method: str
    depth_or_leaves: int
    metric: str
    replication: int
    value: float
    seed: int

    def as_tuple(self) -> tuple:
        return (self.experiment, self.model, self.method, int(self.depth_or_leaves),
                self.metric, float(self.value), int(self.replication), int(self.seed))


@dataclass
class ExperimentReport:
    rows: list[ReportRow] = field(default_factory=list)
    # False when depth_or_leaves varies per replication (selected sizes);
    # aggregates then pool over it and report 0
    aggregate_by_size: bool = True

    def raw(self) -> list[ReportRow]:
        return sorted(r for r in self.rows if r.replication >= 0)

    def aggregates(self) -> list[ReportRow]:
        groups: dict[tuple, list[float]] = defaultdict(list)
        seeds = {}
        for r in self.raw():
            size = r.depth_or_leaves if self.aggregate_by_size else 0
            key = (r.experiment, r.model, r.method, size, r.metric)
            groups[key].append(r.value)
            seeds[key] = r.seed
        return [
            ReportRow(*key, replication=-1, value=float(np.mean(v)), seed=seeds[key])
            for key, v in sorted(groups.items())
        ]

    def mean(self, **match) -> float:
        values = [
            r.value for r in self.raw()
            if all(getattr(r, k) == v for k, v in match.items())
        ]
        if not values:
            raise KeyError(f"no rows match {match}")
        return float(np.mean(values))

    def values(self, **match) -> np.ndarray:
        return np.array([
            r.value for r in self.raw()
            if all(getattr(r, k) == v for k, v in match.items())
        ])

    def to_csv(self, path_or_file) -> None:
        rows = [r.as_tuple() for r in self.aggregates() + self.raw()]
        write_rows(path_or_file, REPORT_COLUMNS, rows)


def _method(kind: CriterionKind, mode: str) -> str:
    return f"{kind.value}_{mode}"


def _run_reps(fn: Callable, reps: int, threads: int, *args) -> ExperimentReport:
    tasks = [(r, *args) for r in range(reps)]
    report = ExperimentReport()
    if threads <= 1:
        for t in tasks:
            report.rows.extend(fn(*t))
    else:
        chunk = max(1, reps // (threads * 8))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for rows in pool.map(fn, *zip(*tasks), chunksize=chunk):
                report.rows.extend(rows)
    return report


# ---------------------------------------------------------------------------
# generalization gap against the number of leaves


@dataclass(frozen=True)
class OverfitConfig:
    reps: int = 500
    n: int = 3000
    max_leaves: int = 20
    beta: float = 1.0
    min_node_size: int = 5
    min_leaf_size: int = PROTOCOL_MIN_LEAF
    seed: int = 0
    threads: int = 1


def _overfit_rep(r: int, cfg: OverfitConfig) -> list[ReportRow]:
    rng = replication_rng(cfg.seed, r)
    spec = DgpSpec("overfit5", cfg.n, params={"beta": cfg.beta})
    train, _ = generate(spec, rng)
    test, _ = generate(spec, rng)
    rows = []
    for kind in CRITERIA:
        tree = grow_full(train, kind, cfg.min_node_size, min_leaf_size=cfg.min_leaf_size)
        seq = prune_sequence(tree, train)
        counts = seq.leaf_counts
        train_risk = seq.train_risks
        test_risk = sequence_node_sums(tree, seq, node_sse(tree, test)) / test.n
        method = _method(kind, "pruned")
        for leaves in range(1, cfg.max_leaves + 1):
            i = int(np.argmax(counts <= leaves))
            tr, te = float(train_risk[i]), float(test_risk[i])
            rows += [
                ReportRow("fig-overfit", "overfit5:train", method, leaves, "l2_risk", r, tr, cfg.seed),
                ReportRow("fig-overfit", "overfit5:test", method, leaves, "l2_risk", r, te, cfg.seed),
                ReportRow("fig-overfit", "overfit5", method, leaves, "gap", r, te - tr, cfg.seed),
            ]
    return rows


def run_fig_overfit(config: OverfitConfig = OverfitConfig()) -> ExperimentReport:
    """Train/test risk of fully grown, then pruned trees for 1..max_leaves leaves."""
    return _run_reps(_overfit_rep, config.reps, config.threads, config)


# ---------------------------------------------------------------------------
# depth-1 split points and signal-covariate selection


@dataclass(frozen=True)
class DensityConfig:
    reps: int = 5000
    n: int = 200
    c0: float = 1.0
    c1_values: tuple[float, ...] = (0.0, 0.5, 1.0)
    min_leaf_size: int = PROTOCOL_MIN_LEAF
    seed: int = 0
    threads: int = 1


def _root_splits(data: Dataset, rng: np.random.Generator, min_leaf_size: int):
    region = NodeRegion.root(data)
    for kind in SPLITTERS:
        split_rng = rng if kind is CriterionKind.RANDOM else None
        yield kind, best_split(data, region, kind, split_rng, min_leaf_size).best


def _density_rep(r: int, cfg: DensityConfig) -> list[ReportRow]:
    rows = []
    for k, c1 in enumerate(cfg.c1_values):
        rng = replication_rng(cfg.seed, r, k)
        data, _ = generate(DgpSpec("simple_linear", cfg.n, params={"c0": cfg.c0, "c1": c1}), rng)
        for kind, split in _root_splits(data, rng, cfg.min_leaf_size):
            s = np.nan if split is None else split.threshold
            rows.append(ReportRow("fig-density", f"simple_linear:c1={c1:g}",
                                  _method(kind, "fixed_depth"), 1, "split_point", r, s, cfg.seed))
    return rows


def run_fig_density(config: DensityConfig = DensityConfig()) -> ExperimentReport:
    """Root split points of depth-1 trees on the one-covariate linear model."""
    return _run_reps(_density_rep, config.reps, config.threads, config)


@dataclass(frozen=True)
class AccuracyConfig:
    reps: int = 5000
    n: int = 200
    c0: float = 1.0
    c1_values: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(11))
    noise_covariates: int = 4
    min_leaf_size: int = PROTOCOL_MIN_LEAF
    seed: int = 0
    threads: int = 1


def _accuracy_rep(r: int, cfg: AccuracyConfig) -> list[ReportRow]:
    rows = []
    for k, c1 in enumerate(cfg.c1_values):
        rng = replication_rng(cfg.seed, r, k)
        params = {"c0": cfg.c0, "c1": c1, "noise_covariates": cfg.noise_covariates}
        data, _ = generate(DgpSpec("simple_linear", cfg.n, params=params), rng)
        for kind, split in _root_splits(data, rng, cfg.min_leaf_size):
            hit = float(split is not None and split.feature == 0)
            rows.append(ReportRow("fig-accuracy", f"simple_linear+noise:c1={c1:g}",
                                  _method(kind, "fixed_depth"), 1, "accuracy", r, hit, cfg.seed))
    return rows


def run_fig_accuracy(config: AccuracyConfig = AccuracyConfig()) -> ExperimentReport:
    """Whether depth-1 trees split on the signal covariate x1 among five."""
    return _run_reps(_accuracy_rep, config.reps, config.threads, config)


# ---------------------------------------------------------------------------
# simulation table


@dataclass(frozen=True)
class Table1Config:
    reps: int = 500
    models: tuple[str, ...] = ("model1", "model2", "model3", "model4")
    n_train: int = 300
    n_validation: int = 300
    n_test: int = 1000
    depths: tuple[int, ...] = (3, 4, 5, 6)
    min_node_size: int = 5
    min_leaf_size: int = PROTOCOL_MIN_LEAF
    seed: int = 0
    threads: int = 1


def _table1_rep(r: int, cfg: Table1Config) -> list[ReportRow]:
    rows = []
    for k, model in enumerate(cfg.models):
        rng = replication_rng(cfg.seed, r, k)
        train, _ = generate(DgpSpec(model, cfg.n_train), rng)
        val, _ = generate(DgpSpec(model, cfg.n_validation), rng)
        test, _ = generate(DgpSpec(model, cfg.n_test), rng)
        for kind in CRITERIA:
            full = grow_full(train, kind, cfg.min_node_size, min_leaf_size=cfg.min_leaf_size)
            for K in cfg.depths:
                risk = empirical_l2_risk(full.truncate(K), test)
                rows.append(ReportRow("table1", model, _method(kind, "fixed_depth"), K,
                                      "l2_risk", r, risk, cfg.seed))
            _, pruned = select_alpha(full, train, val)
            rows.append(ReportRow("table1", model, _method(kind, "pruned"), 0,
                                  "l2_risk", r, empirical_l2_risk(pruned, test), cfg.seed))
    return rows


def run_table1(config: Table1Config = Table1Config()) -> ExperimentReport:
    """Test risk of fixed-depth and validation-pruned trees on Models 1-4.

    Fixed-depth trees are truncations of the fully grown tree, which is the
    same tree depth-limited growth produces for deterministic criteria.
    Pruned rows carry ``depth_or_leaves = 0``.
    """
    return _run_reps(_table1_rep, config.reps, config.threads, config)


def format_table1(report: ExperimentReport) -> str:
    models = sorted({r.model for r in report.raw()})
    depths = sorted({r.depth_or_leaves for r in report.raw() if r.depth_or_leaves > 0})
    lines = [f"{'model':<8}{'K':>3}{'covrt':>9}{'cart':>9}{'pruned covrt':>14}{'pruned cart':>13}"]
    for model in models:
        pc = report.mean(model=model, method="covrt_pruned")
        pa = report.mean(model=model, method="cart_pruned")
        for i, K in enumerate(depths):
            c = report.mean(model=model, method="covrt_fixed_depth", depth_or_leaves=K)
            a = report.mean(model=model, method="cart_fixed_depth", depth_or_leaves=K)
            tail = f"{pc:>14.2f}{pa:>13.2f}" if i == 0 else ""
            lines.append(f"{model if i == 0 else '':<8}{K:>3}{c:>9.2f}{a:>9.2f}{tail}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# real-data benchmarks


@dataclass(frozen=True)
class DatasetSource:
    name: str
    path: str
    target: str
    drop: tuple[str, ...] = ()


FETCH_HELP = {
    "boston": "Boston Housing (506 rows): e.g. the MASS 'Boston' table, target 'medv'.",
    "airfoil": "Airfoil Self-Noise (1503 rows): UCI dataset 291, target = scaled sound pressure.",
    "abalone": "Abalone (4177 rows): UCI dataset 1, target 'rings'; 'sex' is one-hot encoded.",
}


@dataclass(frozen=True)
class Table2Config:
    datasets: tuple[DatasetSource, ...] = ()
    partitions: int = 100
    depths: tuple[int, ...] = tuple(range(1, 11))
    min_node_size: int = 5
    min_leaf_size: int = PROTOCOL_MIN_LEAF
    seed: int = 0
    threads: int = 1


def _table2_rep(r: int, data: Dataset, name: str, cfg: Table2Config) -> list[ReportRow]:
    rng = replication_rng(cfg.seed, r)
    train, val, test = split_dataset(data, (2, 1, 1), rng)
    rows = []
    for kind in CRITERIA:
        full = grow_full(train, kind, cfg.min_node_size, min_leaf_size=cfg.min_leaf_size)
        val_risk = [empirical_l2_risk(full.truncate(K), val) for K in cfg.depths]
        K = cfg.depths[int(np.argmin(val_risk))]
        fixed = full.truncate(K)
        _, pruned = select_alpha(full, train, val)
        for tree, mode, size in ((fixed, "fixed_depth", K), (pruned, "pruned", pruned.n_leaves)):
            method = _method(kind, mode)
            rows.append(ReportRow("table2", name, method, size, "l2_risk", r,
                                  empirical_l2_risk(tree, test), cfg.seed))
            rows.append(ReportRow("table2", name, method, size, "r2", r,
                                  r_squared(tree, test), cfg.seed))
    return rows


def load_source(src: DatasetSource) -> Dataset:
    if not Path(src.path).is_file():
        hint = FETCH_HELP.get(src.name, "")
        raise DataError(f"dataset file {src.path!r} not found. {hint}".strip())
    return load_csv(src.path, src.target, "onehot", src.drop)


def run_table2(config: Table2Config) -> ExperimentReport:
    """Fixed-depth (validation-chosen K) and pruned trees on real datasets.

    Fixed-depth rows carry the chosen depth and pruned rows the leaf count
    in ``depth_or_leaves``; aggregate over it when averaging.
    """
    report = ExperimentReport(aggregate_by_size=False)
    for src in config.datasets:
        data = load_source(src)
        report.rows.extend(_run_reps(_table2_rep, config.partitions, config.threads,
                                     data, src.name, config).rows)
    return report


# ---------------------------------------------------------------------------
# check suites


@dataclass(frozen=True)
class VerifyConfig:
    seed: int = 0
    seeds: int = 100
    n: int = 300
    models: tuple[str, ...] = ("model1", "model2", "model3", "model4")
    depths: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    min_node_size: int = 1
    fuzz_nodes: int = 1000
    beta: float = 1.0
    thm1_n: int = 100_000
    thm2_sizes: tuple[int, ...] = (100, 1000, 10_000)
    thm2_reps: int = 200
    threads: int = 1


def _model_sample(model: str, n: int, seed: int, s: int):
    return generate(DgpSpec(model, n), replication_rng(seed, s))


def _bounds_task(s: int, model: str, cfg: VerifyConfig, which: str) -> theory.CheckReport:
    data, g = _model_sample(model, cfg.n, cfg.seed, s)
    out = theory.CheckReport(which)
    if which == "lemma1":
        deep = grow(data, GrowConfig(CriterionKind.COVRT, max(cfg.depths) - 1, cfg.min_node_size))
        for K in cfg.depths:
            out.extend(theory.check_lemma1(deep.truncate(K - 1), data, g,
                                           label=f"{model}/seed{s}/K{K}/"))
    else:
        for K in cfg.depths:
            out.extend(theory.check_thm3(data, g, K, cfg.min_node_size, label=f"{model}/seed{s}/"))
    return out


def _bounds_suite(cfg: VerifyConfig, which: str) -> theory.CheckReport:
    tasks = list(itertools.product(range(cfg.seeds), cfg.models))
    report = theory.CheckReport(which)
    args = ([s for s, _ in tasks], [m for _, m in tasks], [cfg] * len(tasks), [which] * len(tasks))
    if cfg.threads <= 1:
        for part in map(_bounds_task, *args):
            report.extend(part)
        return report
    with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
        for part in pool.map(_bounds_task, *args, chunksize=8):
            report.extend(part)
    return report


def _identity(cfg: VerifyConfig, prefix: str) -> theory.CheckReport:
    full = theory.identity_suite(cfg.fuzz_nodes, cfg.seed)
    out = theory.CheckReport(prefix)
    out.rows = [r for r in full.rows if r.instance.startswith(prefix + "/")]
    return out


VERIFY_CHECKS: dict[str, Callable[[VerifyConfig], theory.CheckReport]] = {
    "prop1": lambda c: _identity(c, "prop1"),
    "ig-identity": lambda c: _identity(c, "ig-identity"),
    "lemma1": lambda c: _bounds_suite(c, "lemma1"),
    "thm3": lambda c: _bounds_suite(c, "thm3"),
    "thm1": lambda c: theory.check_thm1(c.beta, c.thm1_n, c.seed),
    "thm2": lambda c: theory.check_thm2_convergence(c.beta, c.thm2_sizes, c.thm2_reps, c.seed),
}


def verify(check_name: str, config: VerifyConfig = VerifyConfig()) -> theory.CheckReport:
    """Run a named check suite; the report is clean iff there are no violations."""
    try:
        check = VERIFY_CHECKS[check_name]
    except KeyError:
        raise ValueError(
            f"unknown check {check_name!r}; choose from {sorted(VERIFY_CHECKS)}"
        ) from None
    return check(config)


def write_check_report(report: theory.CheckReport, path_or_file) -> None:
    write_rows(path_or_file, CHECK_COLUMNS,
               ((r.check, r.instance, r.lhs, r.rhs, r.margin, int(r.passed)) for r in report.rows))


def summarize(report: ExperimentReport, by: Sequence[str] = ("model", "method", "depth_or_leaves", "metric")
              ) -> Iterable[tuple]:
    groups: dict[tuple, list[float]] = defaultdict(list)
    for r in report.raw():
        groups[tuple(getattr(r, k) for k in by)].append(r.value)
    for key in sorted(groups):
        yield key + (float(np.nanmean(groups[key])), len(groups[key]))
