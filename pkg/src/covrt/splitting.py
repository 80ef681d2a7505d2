"""Best-split search for the CART and covariance-squared criteria.

Each node is scanned once per feature in sorted order with running prefix
sums of the response, so a node of ``n`` rows and ``p`` features costs
``O(p n log n)`` for the sorts and ``O(p n)`` for the criterion evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import CriterionKind, Dataset, NodeRegion

# Mean differences below this many ulps of the node's largest |y| are
# rounding noise from the prefix sums and count as zero.
_DELTA_ULPS = 64.0


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    threshold: float
    n_left: int
    n_right: int
    sum_left: float
    sum_right: float
    criterion_value: float

    @property
    def mean_left(self) -> float:
        return self.sum_left / self.n_left

    @property
    def mean_right(self) -> float:
        return self.sum_right / self.n_right


@dataclass(frozen=True)
class SplitDecision:
    best: Optional[SplitCandidate]
    criterion: CriterionKind
    candidates_evaluated: int


def _balance_and_delta(n_left, n_right, sum_left, sum_right):
    n = n_left + n_right
    p_left = n_left / n
    p_right = n_right / n
    delta = sum_left / n_left - sum_right / n_right
    return p_left, p_right, delta


def _cs_from_parts(p_left, p_right, delta):
    return (p_left * p_left) * (p_right * p_right) * (delta * delta)


def _ig_from_parts(p_left, p_right, delta):
    return (p_left * p_right) * (delta * delta)


def _check_sides(n_left, n_right) -> None:
    if n_left < 1 or n_right < 1:
        raise ValueError("both daughter nodes must be non-empty")


def covrt_criterion(n_left: int, n_right: int, sum_left: float, sum_right: float) -> float:
    """Empirical squared covariance between the left indicator and y.

    Equals ``P_L**2 * P_R**2 * (mean_L - mean_R)**2``.
    """
    _check_sides(n_left, n_right)
    return float(_cs_from_parts(*_balance_and_delta(n_left, n_right, sum_left, sum_right)))


def cart_gain_from_sums(n_left: int, n_right: int, sum_left: float, sum_right: float) -> float:
    """Impurity gain in its closed form ``P_L * P_R * (mean_L - mean_R)**2``.

    This is the form the split search uses; it avoids the cancellation of
    the sum-of-squares route in :func:`cart_impurity_gain`.
    """
    _check_sides(n_left, n_right)
    return float(_ig_from_parts(*_balance_and_delta(n_left, n_right, sum_left, sum_right)))


def cart_impurity_gain(
    parent_risk: float,
    n_left: int,
    n_right: int,
    left: tuple[float, float],
    right: tuple[float, float],
) -> float:
    """Parent impurity minus the size-weighted impurities of the daughters.

    ``left`` and ``right`` are ``(sum, sum_of_squares)`` of the responses
    routed to each side.
    """
    _check_sides(n_left, n_right)
    n = n_left + n_right
    (s_l, ss_l), (s_r, ss_r) = left, right
    risk_l = max(ss_l / n_left - (s_l / n_left) ** 2, 0.0)
    risk_r = max(ss_r / n_right - (s_r / n_right) ** 2, 0.0)
    gain = parent_risk - (n_left / n) * risk_l - (n_right / n) * risk_r
    return max(float(gain), 0.0)


def criterion_value(kind: CriterionKind, n_left, n_right, sum_left, sum_right):
    """Criterion for CART or COVRT from counts and sums; vectorises over arrays."""
    parts = _balance_and_delta(n_left, n_right, sum_left, sum_right)
    if kind is CriterionKind.COVRT:
        return _cs_from_parts(*parts)
    if kind is CriterionKind.CART:
        return _ig_from_parts(*parts)
    raise ValueError(f"{kind} has no criterion value")


def delta_tolerance(y: np.ndarray) -> float:
    return _DELTA_ULPS * np.finfo(np.float64).eps * float(np.max(np.abs(y)))


def _sorted_scan(X: np.ndarray, y: np.ndarray):
    """Per-feature sorted prefix statistics of a node.

    Returns left counts, left sums, midpoint thresholds and a validity mask,
    each of shape ``(n - 1, p)``; position ``k`` puts the ``k + 1`` smallest
    values of the feature on the left.
    """
    n = X.shape[0]
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    lo, hi = xs[:-1], xs[1:]
    valid = hi > lo
    thresholds = (lo + hi) / 2.0
    # adjacent doubles: the midpoint can round up onto the right value
    thresholds = np.where(thresholds < hi, thresholds, lo)
    sum_left = np.cumsum(y[order], axis=0)[:-1]
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    return n_left, sum_left, thresholds, valid


def best_split(
    data: Dataset,
    region: NodeRegion,
    criterion: CriterionKind | str,
    rng: Optional[np.random.Generator] = None,
    min_leaf_size: int = 1,
) -> SplitDecision:
    """Search every feature and midpoint threshold for the best split of a node.

    For CART and COVRT the maximiser of the criterion is returned; ties go
    to the smallest feature index, then the smallest threshold. No split is
    returned when the maximum is zero. For RANDOM a feature with at least two
    distinct values is drawn uniformly, then one of its midpoints uniformly.

    Candidates leaving fewer than ``min_leaf_size`` rows on either side are
    skipped.
    """
    kind = CriterionKind.parse(criterion)
    rows = region.row_indices
    if rows.size < 2:
        raise ValueError("a node needs at least two rows to be split")
    X = data.features[rows]
    y = data.response[rows]
    n = rows.size
    n_left, sum_left, thresholds, valid = _sorted_scan(X, y)
    if min_leaf_size > 1:
        valid &= (n_left >= min_leaf_size) & (n - n_left >= min_leaf_size)
    total = float(np.sum(y))
    evaluated = int(valid.sum())

    if kind is CriterionKind.RANDOM:
        if rng is None:
            raise ValueError("RANDOM splitting needs a random generator")
        usable = np.flatnonzero(valid.any(axis=0))
        if usable.size == 0:
            return SplitDecision(None, kind, evaluated)
        j = int(rng.choice(usable))
        k = int(rng.choice(np.flatnonzero(valid[:, j])))
        nl = k + 1
        sl = float(sum_left[k, j])
        return SplitDecision(
            SplitCandidate(j, float(thresholds[k, j]), nl, n - nl, sl, total - sl, 0.0),
            kind,
            evaluated,
        )

    if evaluated == 0 or np.ptp(y) == 0.0:
        return SplitDecision(None, kind, evaluated)

    n_right = n - n_left
    sum_right = total - sum_left
    p_left, p_right, delta = _balance_and_delta(n_left, n_right, sum_left, sum_right)
    delta = np.where(np.abs(delta) <= delta_tolerance(y), 0.0, delta)
    if kind is CriterionKind.COVRT:
        values = _cs_from_parts(p_left, p_right, delta)
    else:
        values = _ig_from_parts(p_left, p_right, delta)
    values = np.where(valid, values, -np.inf)

    # feature-major flattening: argmax keeps the first maximum, which is the
    # smallest feature and then the smallest threshold
    flat = int(np.argmax(values.T))
    j, k = divmod(flat, n - 1)
    best_value = float(values[k, j])
    if not best_value > 0.0:
        return SplitDecision(None, kind, evaluated)
    nl = k + 1
    sl = float(sum_left[k, j])
    return SplitDecision(
        SplitCandidate(j, float(thresholds[k, j]), nl, n - nl, sl, total - sl, best_value),
        kind,
        evaluated,
    )


def _daughters(data: Dataset, region: NodeRegion, j: int, s: float):
    rows = region.row_indices
    go_left = data.features[rows, j] <= s
    y = data.response[rows]
    y_left, y_right = y[go_left], y[~go_left]
    if y_left.size == 0 or y_right.size == 0:
        raise ValueError(f"split (feature={j}, threshold={s}) leaves a daughter empty")
    return y, y_left, y_right, go_left


def ig_cs_identity_check(
    data: Dataset, region: NodeRegion, j: int, s: float
) -> tuple[float, float, float]:
    """Impurity gain and covariance-squared of one split, computed from scratch.

    Returns ``(IG, CS, IG - CS / (P_L * P_R))`` where IG is evaluated from its
    definition as the drop in within-node risk.
    """
    y, y_left, y_right, _ = _daughters(data, region, j, s)
    n, n_l, n_r = y.size, y_left.size, y_right.size
    p_l, p_r = n_l / n, n_r / n
    m, m_l, m_r = np.mean(y), np.mean(y_left), np.mean(y_right)
    parent = np.mean((y - m) ** 2)
    ig = parent - p_l * np.mean((y_left - m_l) ** 2) - p_r * np.mean((y_right - m_r) ** 2)
    cs = p_l**2 * p_r**2 * (m_l - m_r) ** 2
    return float(ig), float(cs), float(ig - cs / (p_l * p_r))


def naive_best_split(
    data: Dataset, region: NodeRegion, criterion: CriterionKind | str, min_leaf_size: int = 1
):
    """Brute-force split search: recompute every candidate from masked sums.

    Slow reference for tests of :func:`best_split`. Returns
    ``(feature, threshold, value)`` or ``None``.
    """
    kind = CriterionKind.parse(criterion)
    rows = region.row_indices
    X = data.features[rows]
    y = data.response[rows]
    tol = delta_tolerance(y)
    best = None
    if np.ptp(y) == 0.0:
        return None
    for j in range(X.shape[1]):
        values = np.unique(X[:, j])
        for lo, hi in zip(values[:-1], values[1:]):
            s = (lo + hi) / 2.0
            if not s < hi:
                s = lo
            mask = X[:, j] <= s
            nl = int(mask.sum())
            nr = rows.size - nl
            if min(nl, nr) < min_leaf_size:
                continue
            sl = float(np.sum(y[mask]))
            sr = float(np.sum(y[~mask]))
            p_l, p_r, delta = _balance_and_delta(nl, nr, sl, sr)
            if abs(delta) <= tol:
                delta = 0.0
            if kind is CriterionKind.COVRT:
                v = float(_cs_from_parts(p_l, p_r, delta))
            else:
                v = float(_ig_from_parts(p_l, p_r, delta))
            if best is None or v > best[2]:
                best = (j, float(s), v)
    if best is None or not best[2] > 0.0:
        return None
    return best
