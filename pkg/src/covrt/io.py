"""Dataset ingestion, partitioning and model persistence."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import LEAF, CriterionKind, Dataset, DataError, Tree

MODEL_FORMAT_VERSION = 1
CATEGORICAL_POLICIES = ("onehot", "reject")


def _parse_float(cell: str) -> float | None:
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_csv(
    path: str | Path,
    target_column: str,
    categorical_policy: str = "onehot",
    drop_columns: Sequence[str] = (),
) -> Dataset:
    """Read a headed, comma-separated file into a :class:`Dataset`.

    Columns with any non-numeric cell are categorical; under ``"onehot"``
    each becomes one {0, 1} column per distinct value, named ``col=value``
    and ordered by value. Blank cells are rejected with the offending row
    number (1-based, header excluded).
    """
    if categorical_policy not in CATEGORICAL_POLICIES:
        raise ValueError(f"categorical_policy must be one of {CATEGORICAL_POLICIES}")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    if target_column not in header:
        raise DataError(f"{path}: target column {target_column!r} not in header")
    for name in drop_columns:
        if name not in header:
            raise DataError(f"{path}: column {name!r} to drop not in header")
    if not rows:
        raise DataError(f"{path}: no data rows")
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} cells, header has {len(header)}")
        for name, cell in zip(header, row):
            if name not in drop_columns and not cell.strip():
                raise DataError(f"{path}: row {i} has a blank cell in column {name!r}")

    keep = [k for k, name in enumerate(header) if name not in drop_columns]
    target_idx = header.index(target_column)
    y = []
    for i, row in enumerate(rows, start=1):
        value = _parse_float(row[target_idx].strip())
        if value is None:
            raise DataError(f"{path}: row {i} has a non-numeric target {row[target_idx]!r}")
        y.append(value)

    columns, names = [], []
    for k in keep:
        if k == target_idx:
            continue
        cells = [row[k].strip() for row in rows]
        parsed = [_parse_float(c) for c in cells]
        if all(v is not None for v in parsed):
            columns.append(np.array(parsed, dtype=float))
            names.append(header[k])
            continue
        if categorical_policy == "reject":
            bad = next(i for i, v in enumerate(parsed, start=1) if v is None)
            raise DataError(f"{path}: row {bad} has a non-numeric cell in column {header[k]!r}")
        levels = sorted(set(cells))
        for level in levels:
            columns.append(np.array([c == level for c in cells], dtype=float))
            names.append(f"{header[k]}={level}")
    if not columns:
        raise DataError(f"{path}: no feature columns")
    return Dataset(np.column_stack(columns), np.array(y), tuple(names), target_column)


def split_sizes(n: int, ratios: Sequence[float]) -> list[int]:
    """Part sizes: floor for every part but the last, remainder to the last."""
    ratios = [float(r) for r in ratios]
    if len(ratios) < 1 or any(r <= 0 for r in ratios):
        raise ValueError("ratios must be positive")
    total = sum(ratios)
    sizes = [int(math.floor(n * r / total)) for r in ratios[:-1]]
    sizes.append(n - sum(sizes))
    if any(s < 1 for s in sizes):
        raise DataError(f"{n} rows cannot be split {ratios} without an empty part")
    return sizes


def split_dataset(
    data: Dataset, ratios: Sequence[float] = (2, 1, 1), seed: int | np.random.Generator = 0
) -> tuple[Dataset, ...]:
    """Shuffle rows uniformly and slice them into contiguous parts."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    perm = rng.permutation(data.n)
    sizes = split_sizes(data.n, ratios)
    bounds = np.cumsum([0] + sizes)
    return tuple(data.subset(perm[a:b]) for a, b in zip(bounds[:-1], bounds[1:]))


# ---------------------------------------------------------------------------
# model files


def tree_to_dict(tree: Tree) -> dict:
    nodes = []
    for i in range(tree.node_count):
        leaf = tree.left[i] == LEAF
        nodes.append({
            "id": i,
            "kind": "leaf" if leaf else "internal",
            "feature": None if leaf else int(tree.feature[i]),
            "threshold": None if leaf else float(tree.threshold[i]),
            "left": None if leaf else int(tree.left[i]),
            "right": None if leaf else int(tree.right[i]),
            "n": int(tree.n[i]),
            "mean": float(tree.mean[i]),
            "risk": float(tree.risk[i]),
        })
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "criterion": tree.criterion.value,
        "max_depth": int(tree.max_depth),
        "min_node_size": int(tree.min_node_size),
        "column_names": list(tree.column_names),
        "nodes": nodes,
    }


def tree_from_dict(doc: dict) -> Tree:
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model format_version {version!r}")
    nodes = sorted(doc["nodes"], key=lambda d: d["id"])
    if [d["id"] for d in nodes] != list(range(len(nodes))):
        raise DataError("model node ids must be 0..n-1")
    m = len(nodes)
    feature = np.full(m, LEAF)
    threshold = np.full(m, np.nan)
    left = np.full(m, LEAF)
    right = np.full(m, LEAF)
    for i, d in enumerate(nodes):
        if d["kind"] == "internal":
            feature[i], threshold[i] = d["feature"], d["threshold"]
            left[i], right[i] = d["left"], d["right"]
        elif d["kind"] != "leaf":
            raise DataError(f"node {i}: unknown kind {d['kind']!r}")
    depth = np.zeros(m, dtype=int)
    seen = np.zeros(m, dtype=bool)
    seen[0] = True
    stack = [0]
    while stack:
        i = stack.pop()
        if left[i] != LEAF:
            for c in (left[i], right[i]):
                if not 0 < c < m or seen[c]:
                    raise DataError(f"node {i}: child {c} is invalid or has two parents")
                seen[c] = True
                depth[c] = depth[i] + 1
                stack.append(c)
    if not seen.all():
        raise DataError("model contains unreachable nodes")
    return Tree(
        feature=feature,
        threshold=threshold,
        left=left,
        right=right,
        n=[d["n"] for d in nodes],
        mean=[d["mean"] for d in nodes],
        risk=[d["risk"] for d in nodes],
        depth=depth,
        criterion=CriterionKind.parse(doc["criterion"]),
        max_depth=int(doc["max_depth"]),
        min_node_size=int(doc["min_node_size"]),
        column_names=tuple(doc["column_names"]),
    )


def dumps_tree(tree: Tree) -> str:
    # json writes floats with repr(), the shortest string that round-trips
    return json.dumps(tree_to_dict(tree), indent=1) + "\n"


def save_tree(tree: Tree, path: str | Path) -> None:
    Path(path).write_text(dumps_tree(tree), encoding="utf-8")


def load_tree(path: str | Path) -> Tree:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a model file ({exc})") from None
    return tree_from_dict(doc)


def write_dataset_csv(data: Dataset, path_or_file) -> None:
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(data.column_names) + [data.response_name])
        for row, y in zip(data.features, data.response):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(y))])
    finally:
        if own:
            fh.close()


def write_rows(path_or_file, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    finally:
        if own:
            fh.close()
