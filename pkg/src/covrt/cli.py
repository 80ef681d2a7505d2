"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

from . import experiments as ex
from .data import CriterionKind, DataError
from .evaluation import empirical_l2_risk, r_squared
from .grower import FULL_DEPTH, GrowConfig, grow
from .io import load_csv, load_tree, save_tree, write_dataset_csv, write_rows
from .pruning import prune_to_leaves, select_alpha
from .simgen import DGP_NAMES, DgpSpec, generate

log = logging.getLogger("covrt")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3
DEFAULT_TARGETS = {"boston": "medv", "airfoil": "scaled_sound_pressure", "abalone": "rings"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _depth(value: str) -> int:
    if value == "full":
        return FULL_DEPTH
    depth = int(value)
    if depth < 0:
        raise argparse.ArgumentTypeError("depth must be >= 0")
    return depth


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    return key, value


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(args) -> int:
    data = load_csv(args.data, args.target, args.categorical, args.drop)
    config = GrowConfig(args.criterion, args.max_depth, args.min_node_size, args.seed,
                        args.min_leaf_size)
    tree = grow(data, config)
    if args.out in (None, "-"):
        raise UsageError("train needs --out for the model file")
    save_tree(tree, args.out)
    log.info("grew %d leaves (depth %d)", tree.n_leaves, tree.actual_depth)
    return EXIT_OK


def _features_for(tree, path, target, categorical, drop):
    # a response column is optional at prediction time
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh))
    target = target if target in header else header[-1]
    data = load_csv(path, target, categorical, drop)
    if data.column_names != tree.column_names:
        missing = set(tree.column_names) - set(data.column_names)
        raise DataError(f"{path}: columns do not match the model (missing {sorted(missing)})")
    return data


def cmd_predict(args) -> int:
    tree = load_tree(args.model)
    data = _features_for(tree, args.data, args.target, args.categorical, args.drop)
    preds = tree.predict(data.features)
    with _output(args.out) as fh:
        write_rows(fh, ["prediction"], ([float(v)] for v in preds))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    tree = load_tree(args.model)
    data = load_csv(args.data, args.target, args.categorical, args.drop)
    rows = [("l2_risk", empirical_l2_risk(tree, data)), ("n", data.n)]
    if data.n >= 2 and data.response.std() > 0:
        rows.insert(1, ("r2", r_squared(tree, data)))
    with _output(args.out) as fh:
        write_rows(fh, ["metric", "value"], rows)
    return EXIT_OK


def cmd_prune(args) -> int:
    tree = load_tree(args.model)
    train = load_csv(args.data, args.target, args.categorical, args.drop)
    if (args.leaves is None) == (args.validation is None):
        raise UsageError("prune needs exactly one of --leaves or --validation")
    if args.leaves is not None:
        pruned = prune_to_leaves(tree, train, args.leaves)
    else:
        validation = load_csv(args.validation, args.target, args.categorical, args.drop)
        alpha, pruned = select_alpha(tree, train, validation)
        log.info("selected alpha %.6g", alpha)
    if args.out in (None, "-"):
        raise UsageError("prune needs --out for the model file")
    save_tree(pruned, args.out)
    log.info("pruned to %d leaves", pruned.n_leaves)
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = {k: _number(v) for k, v in args.param}
    data, _ = generate(DgpSpec(args.dgp, args.n, args.seed, params))
    with _output(args.out) as fh:
        write_dataset_csv(data, fh)
    return EXIT_OK


def _table2_sources(args) -> tuple[ex.DatasetSource, ...]:
    sources = []
    for name, path in args.dataset:
        target = dict(args.target_of).get(name, DEFAULT_TARGETS.get(name))
        if target is None:
            raise UsageError(f"no default target for dataset {name!r}; pass --target-of {name}=COL")
        if not Path(path).is_file():
            raise DataError(f"dataset file {path!r} not found. {ex.FETCH_HELP.get(name, '')}")
        with open(path, newline="", encoding="utf-8") as fh:
            header = [h.strip() for h in next(csv.reader(fh))]
        sources.append(ex.DatasetSource(name, path, target, tuple(h for h in header if not h)))
    if not sources:
        raise UsageError("table2 needs at least one --dataset NAME=PATH")
    return tuple(sources)


def cmd_experiment(args) -> int:
    common = {"seed": args.seed, "threads": args.threads, "min_leaf_size": args.min_leaf_size}
    reps = args.reps
    name = args.name
    if name == "fig-overfit":
        report = ex.run_fig_overfit(ex.OverfitConfig(reps=reps or 500, beta=args.beta, **common))
    elif name == "fig-density":
        report = ex.run_fig_density(ex.DensityConfig(reps=reps or 5000, **common))
    elif name == "fig-accuracy":
        report = ex.run_fig_accuracy(ex.AccuracyConfig(reps=reps or 5000, **common))
    elif name == "table1":
        report = ex.run_table1(ex.Table1Config(reps=reps or 500, **common))
        print(ex.format_table1(report), file=sys.stderr)
    else:
        report = ex.run_table2(ex.Table2Config(_table2_sources(args), partitions=reps or 100, **common))
    with _output(args.out) as fh:
        report.to_csv(fh)
    return EXIT_OK


def cmd_verify(args) -> int:
    config = ex.VerifyConfig(seed=args.seed, threads=args.threads,
                             **({"seeds": args.reps} if args.reps else {}))
    report = ex.verify(args.check, config)
    with _output(args.out) as fh:
        ex.write_check_report(report, fh)
    for note in report.notes:
        log.warning(note)
    log.info("%s: %d checks, %d violations", args.check, len(report.rows), report.violations)
    return EXIT_OK if report.ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# parser


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # the copy attached to subcommands must not overwrite values given before the subcommand
    def default(value):
        return argparse.SUPPRESS if suppress else value

    flags = _Parser(add_help=False)
    flags.add_argument("--seed", type=int, default=default(0), help="base random seed")
    flags.add_argument("--out", default=default(None), help="output file ('-' or omitted: stdout)")
    flags.add_argument("--reps", type=int, default=default(None),
                       help="replications, partitions or seeds")
    flags.add_argument("--threads", type=int, default=default(1), help="worker processes")
    flags.add_argument("-v", "--verbose", action="store_true", default=default(False))
    return flags


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)

    data_args = _Parser(add_help=False)
    data_args.add_argument("--data", required=True, help="input CSV with a header row")
    data_args.add_argument("--target", default="y", help="response column name")
    data_args.add_argument("--drop", action="append", default=[], help="column to ignore")
    data_args.add_argument("--categorical", choices=("onehot", "reject"), default="onehot")

    parser = _Parser(prog="covrt", description="Covariance-driven and CART regression trees.",
                     parents=[_global_flags(suppress=False)])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", parents=[common, data_args], help="grow a tree")
    p.add_argument("--criterion", type=CriterionKind.parse, default=CriterionKind.COVRT)
    p.add_argument("--max-depth", type=_depth, default="full", help="integer or 'full'")
    p.add_argument("--min-node-size", type=int, default=5)
    p.add_argument("--min-leaf-size", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common, data_args], help="predict with a model file")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", parents=[common, data_args], help="L2 risk and R^2 of a model")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("prune", parents=[common, data_args], help="weakest-link pruning")
    p.add_argument("--model", required=True)
    p.add_argument("--leaves", type=int, default=None, help="target number of leaves")
    p.add_argument("--validation", default=None, help="validation CSV for choosing alpha")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("simulate", parents=[common], help="sample a simulation model to CSV")
    p.add_argument("--dgp", choices=DGP_NAMES, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--param", type=_key_value, action="append", default=[], metavar="KEY=VALUE")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", parents=[common], help="run an experiment pipeline")
    p.add_argument("name", choices=("fig-overfit", "fig-density", "fig-accuracy", "table1", "table2"))
    p.add_argument("--min-leaf-size", type=int, default=ex.PROTOCOL_MIN_LEAF)
    p.add_argument("--beta", type=float, default=1.0, help="fig-overfit signal scale")
    p.add_argument("--dataset", type=_key_value, action="append", default=[], metavar="NAME=PATH",
                   help="table2 input (boston, airfoil, abalone)")
    p.add_argument("--target-of", type=_key_value, action="append", default=[], metavar="NAME=COL")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", parents=[common], help="run a theory check suite")
    p.add_argument("check", choices=sorted(ex.VERIFY_CHECKS))
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"covrt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"covrt: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"covrt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
