"""Core domain types: datasets and fitted regression trees."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

LEAF = -1


class CriterionKind(str, enum.Enum):
    """Node-splitting rule used to grow a tree."""

    CART = "cart"
    COVRT = "covrt"
    RANDOM = "random"

    @classmethod
    def parse(cls, value: "CriterionKind | str") -> "CriterionKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown criterion {value!r}; expected one of "
                f"{[c.value for c in cls]}"
            ) from None


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


@dataclass(frozen=True)
class Dataset:
    """Numeric design matrix and response vector with column names.

    Attributes
    ----------
    features : ndarray of shape (N, p)
        Stored column-major; read-only after construction.
    response : ndarray of shape (N,)
    column_names : tuple of str
    response_name : str
    """

    features: np.ndarray
    response: np.ndarray
    column_names: tuple[str, ...] = ()
    response_name: str = "y"

    def __post_init__(self) -> None:
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.response, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or y.ndim != 1:
            raise DataError("features must be 2-D and response 1-D")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DataError("dataset needs at least one row and one column")
        if X.shape[0] != y.shape[0]:
            raise DataError(
                f"features have {X.shape[0]} rows but response has {y.shape[0]}"
            )
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise DataError("dataset contains non-finite values")
        names = tuple(self.column_names) or tuple(
            f"x{j + 1}" for j in range(X.shape[1])
        )
        if len(names) != X.shape[1]:
            raise DataError(
                f"{len(names)} column names given for {X.shape[1]} columns"
            )
        X = np.asfortranarray(X)
        X.flags.writeable = False
        y = np.ascontiguousarray(y)
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, rows: np.ndarray) -> "Dataset":
        rows = np.asarray(rows)
        if rows.size == 0:
            raise DataError("empty subset")
        return Dataset(
            self.features[rows],
            self.response[rows],
            self.column_names,
            self.response_name,
        )


@dataclass(frozen=True)
class NodeRegion:
    """Rows of a dataset falling into one tree node."""

    row_indices: np.ndarray
    depth: int = 0

    def __post_init__(self) -> None:
        rows = np.asarray(self.row_indices, dtype=np.intp)
        if rows.ndim != 1 or rows.size == 0:
            raise ValueError("node region must contain at least one row")
        object.__setattr__(self, "row_indices", rows)

    @classmethod
    def root(cls, data: Dataset) -> "NodeRegion":
        return cls(np.arange(data.n), 0)

    @property
    def size(self) -> int:
        return self.row_indices.size


def node_mean_and_risk(data: Dataset, region: NodeRegion) -> tuple[float, float]:
    """Return the node mean and the within-node L2 risk of that mean."""
    y = data.response[region.row_indices]
    if y.size == 0:
        raise ValueError("empty region")
    mean = float(np.mean(y))
    risk = float(np.mean((y - mean) ** 2))
    return mean, risk


@dataclass(frozen=True)
class Node:
    """Read-only view of one node of a :class:`Tree`."""

    id: int
    kind: str
    n: int
    mean: float
    risk: float
    depth: int
    feature: int = LEAF
    threshold: float = float("nan")
    left: int = LEAF
    right: int = LEAF

    @property
    def is_leaf(self) -> bool:
        return self.kind == "leaf"


@dataclass(frozen=True, eq=False)
class Tree:
    """Fitted piecewise-constant regression tree with an index-based node store.

    Node 0 is the root. For internal nodes ``left``/``right`` hold child ids;
    leaves carry ``LEAF`` (-1) in ``left``, ``right`` and ``feature``. A point
    goes left iff ``x[feature] <= threshold``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    n: np.ndarray
    mean: np.ndarray
    risk: np.ndarray
    depth: np.ndarray
    criterion: CriterionKind
    max_depth: int
    min_node_size: int
    column_names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        casts = {
            "feature": np.intp,
            "threshold": np.float64,
            "left": np.intp,
            "right": np.intp,
            "n": np.intp,
            "mean": np.float64,
            "risk": np.float64,
            "depth": np.intp,
        }
        for name, dtype in casts.items():
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "criterion", CriterionKind.parse(self.criterion))
        object.__setattr__(self, "column_names", tuple(self.column_names))

    @property
    def node_count(self) -> int:
        return self.left.size

    @property
    def n_features(self) -> int:
        return len(self.column_names)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.left == LEAF

    @property
    def n_leaves(self) -> int:
        return int(self.is_leaf.sum())

    @property
    def actual_depth(self) -> int:
        return int(self.depth[self.is_leaf].max())

    def node(self, i: int) -> Node:
        leaf = bool(self.left[i] == LEAF)
        return Node(
            id=int(i),
            kind="leaf" if leaf else "internal",
            n=int(self.n[i]),
            mean=float(self.mean[i]),
            risk=float(self.risk[i]),
            depth=int(self.depth[i]),
            feature=int(self.feature[i]),
            threshold=float(self.threshold[i]),
            left=int(self.left[i]),
            right=int(self.right[i]),
        )

    def nodes(self) -> list[Node]:
        return [self.node(i) for i in range(self.node_count)]

    def parents(self) -> np.ndarray:
        parent = np.full(self.node_count, LEAF, dtype=np.intp)
        internal = np.flatnonzero(~self.is_leaf)
        parent[self.left[internal]] = internal
        parent[self.right[internal]] = internal
        return parent

    def _check_points(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(
                f"expected points with {self.n_features} features, got shape {X.shape}"
            )
        if not np.isfinite(X).all():
            raise ValueError("points must be finite")
        return X

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Return the id of the leaf reached by every row of ``X``."""
        X = self._check_points(X)
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.left[node] != LEAF)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.left[node[active]] != LEAF]
        return node

    def decision_path(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Pairs ``(row, node)`` for every node visited by every row."""
        X = self._check_points(X)
        rows_out = [np.arange(X.shape[0])]
        nodes_out = [np.zeros(X.shape[0], dtype=np.intp)]
        rows, node = rows_out[0], nodes_out[0]
        while True:
            internal = self.left[node] != LEAF
            rows, node = rows[internal], node[internal]
            if rows.size == 0:
                break
            go_left = X[rows, self.feature[node]] <= self.threshold[node]
            node = np.where(go_left, self.left[node], self.right[node])
            rows_out.append(rows)
            nodes_out.append(node)
        return np.concatenate(rows_out), np.concatenate(nodes_out)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.mean[self.apply(X)]

    def subtree(self, collapsed: Sequence[int] | np.ndarray) -> "Tree":
        """Copy of the tree with the given internal nodes turned into leaves.

        Nodes below a collapsed node are dropped and the survivors renumbered
        in their original order.
        """
        make_leaf = np.zeros(self.node_count, dtype=bool)
        make_leaf[np.asarray(collapsed, dtype=np.intp)] = True
        keep = np.zeros(self.node_count, dtype=bool)
        stack = [0]
        while stack:
            i = stack.pop()
            keep[i] = True
            if self.left[i] != LEAF and not make_leaf[i]:
                stack.extend((int(self.left[i]), int(self.right[i])))
        return self._compact(keep, make_leaf)

    def truncate(self, max_depth: int) -> "Tree":
        """Copy of the tree with every node at ``depth == max_depth`` made a leaf."""
        keep = self.depth <= max_depth
        make_leaf = self.depth == max_depth
        out = self._compact(keep, make_leaf)
        return out._replace(max_depth=min(self.max_depth, max_depth))

    def _replace(self, **changes) -> "Tree":
        fields = {
            name: getattr(self, name)
            for name in (
                "feature", "threshold", "left", "right", "n", "mean", "risk",
                "depth", "criterion", "max_depth", "min_node_size", "column_names",
            )
        }
        fields.update(changes)
        return Tree(**fields)

    def _compact(self, keep: np.ndarray, make_leaf: np.ndarray) -> "Tree":
        ids = np.flatnonzero(keep)
        new_id = np.full(self.node_count, LEAF, dtype=np.intp)
        new_id[ids] = np.arange(ids.size)
        leaf = (self.left[ids] == LEAF) | make_leaf[ids]
        left = np.where(leaf, LEAF, new_id[np.where(leaf, 0, self.left[ids])])
        right = np.where(leaf, LEAF, new_id[np.where(leaf, 0, self.right[ids])])
        return self._replace(
            feature=np.where(leaf, LEAF, self.feature[ids]),
            threshold=np.where(leaf, np.nan, self.threshold[ids]),
            left=left,
            right=right,
            n=self.n[ids],
            mean=self.mean[ids],
            risk=self.risk[ids],
            depth=self.depth[ids],
        )

    def structurally_equal(self, other: "Tree") -> bool:
        """Exact equality of every node field and of the growth settings."""
        if not isinstance(other, Tree) or self.node_count != other.node_count:
            return False
        same_arrays = all(
            np.array_equal(getattr(self, a), getattr(other, a), equal_nan=True)
            for a in ("feature", "threshold", "left", "right", "n", "mean", "risk", "depth")
        )
        return (
            same_arrays
            and self.criterion == other.criterion
            and self.max_depth == other.max_depth
            and self.min_node_size == other.min_node_size
            and self.column_names == other.column_names
        )


def predict(tree: Tree, point: Sequence[float] | np.ndarray) -> float:
    """Prediction of ``tree`` at a single point."""
    point = np.asarray(point, dtype=np.float64)
    if point.ndim != 1:
        raise ValueError("predict expects a single point; use Tree.predict for batches")
    return float(tree.predict(point[None, :])[0])


def training_risk_by_leaves(tree: Tree) -> float:
    """Global training L2 risk reconstructed from stored leaf statistics."""
    leaf = tree.is_leaf
    return float(np.sum(tree.n[leaf] * tree.risk[leaf]) / tree.n[0])
