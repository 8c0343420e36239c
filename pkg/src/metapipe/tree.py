"""Binary decision tree induced by recursive partitioning.

Candidate thresholds sit at midpoints between consecutive distinct sorted
feature values; the split rule is x[f] <= t. The split with maximal
information gain wins, ties going to the lower feature index and then the
lower threshold. Gains within GAIN_TIE_TOL of each other count as tied, so
float rounding cannot flip the canonical tie-break.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import as_labels, as_matrix

GAIN_TIE_TOL = 1e-12


@dataclass
class TreeHyperparams:
    max_depth: Optional[int] = 10  # None = unlimited
    min_samples_split: int = 2
    impurity_kind: str = "gini"  # "gini" | "entropy"

    def __post_init__(self):
        if self.impurity_kind not in ("gini", "entropy"):
            raise ValueError(f"unknown impurity kind {self.impurity_kind!r}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")


@dataclass
class Leaf:
    label: int
    counts: tuple[int, int]  # (n0, n1)


@dataclass
class Internal:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"


Node = Union[Leaf, Internal]


@dataclass
class TreeModel:
    root: Node
    n_features: int
    hyperparams: TreeHyperparams = field(default_factory=TreeHyperparams)


def impurity(counts, kind: str = "gini") -> float:
    n0, n1 = counts
    if n0 < 0 or n1 < 0 or n0 + n1 < 1:
        raise ValueError(f"invalid class counts {counts}")
    total = n0 + n1
    p0, p1 = n0 / total, n1 / total
    if kind == "gini":
        return 1.0 - p0 * p0 - p1 * p1
    if kind == "entropy":
        h = 0.0
        for p in (p0, p1):
            if p > 0.0:
                h -= p * math.log2(p)
        return h
    raise ValueError(f"unknown impurity kind {kind!r}")


def information_gain(parent_counts, left_counts, right_counts, kind: str = "gini") -> float:
    """Parent impurity minus the sample-weighted child impurities."""
    if (
        left_counts[0] + right_counts[0] != parent_counts[0]
        or left_counts[1] + right_counts[1] != parent_counts[1]
    ):
        raise ValueError("child counts do not add up to the parent counts")
    n_left, n_right = sum(left_counts), sum(right_counts)
    if n_left == 0 or n_right == 0:
        raise ValueError("both children must be nonempty")
    n = n_left + n_right
    return (
        impurity(parent_counts, kind)
        - n_left / n * impurity(left_counts, kind)
        - n_right / n * impurity(right_counts, kind)
    )


def _impurity_vec(n0, n1, kind):
    total = n0 + n1
    p0 = n0 / total
    p1 = n1 / total
    if kind == "gini":
        return 1.0 - p0 * p0 - p1 * p1
    h = np.zeros_like(p0)
    for p in (p0, p1):
        nz = p > 0
        h[nz] -= p[nz] * np.log2(p[nz])
    return h


def _best_split_for_feature(col, y, kind):
    """(gain, threshold) of the best cut on one feature, or None."""
    order = np.argsort(col, kind="stable")
    sv = col[order]
    sy = y[order]
    change = np.nonzero(sv[1:] != sv[:-1])[0]
    if len(change) == 0:
        return None
    n = len(y)
    total1 = int(sy.sum())
    total0 = n - total1
    cum1 = np.cumsum(sy)
    n_left = change + 1.0
    n1_left = cum1[change].astype(np.float64)
    n0_left = n_left - n1_left
    n1_right = total1 - n1_left
    n0_right = (n - n_left) - n1_right
    parent = impurity((total0, total1), kind)
    child = (
        n_left / n * _impurity_vec(n0_left, n1_left, kind)
        + (n - n_left) / n * _impurity_vec(n0_right, n1_right, kind)
    )
    gains = parent - child
    # lowest threshold among (near-)maximal gains
    best = int(np.nonzero(gains >= gains.max() - GAIN_TIE_TOL)[0][0])
    thresholds = (sv[change] + sv[change + 1]) / 2.0
    return float(gains[best]), float(thresholds[best])


def _build(X, y, depth, hp: TreeHyperparams) -> Node:
    n1 = int(y.sum())
    n0 = len(y) - n1
    counts = (n0, n1)
    majority = 1 if n1 > n0 else 0  # ties go to 0
    at_depth_cap = hp.max_depth is not None and depth >= hp.max_depth
    if n0 == 0 or n1 == 0 or at_depth_cap or len(y) < hp.min_samples_split:
        return Leaf(label=majority, counts=counts)

    best_gain, best_feature, best_threshold = 0.0, None, None
    for f in range(X.shape[1]):
        found = _best_split_for_feature(X[:, f], y, hp.impurity_kind)
        if found is None:
            continue
        gain, threshold = found
        if best_feature is None or gain > best_gain + GAIN_TIE_TOL:
            best_gain, best_feature, best_threshold = gain, f, threshold
    if best_feature is None or best_gain <= GAIN_TIE_TOL:
        return Leaf(label=majority, counts=counts)

    mask = X[:, best_feature] <= best_threshold
    return Internal(
        feature=best_feature,
        threshold=best_threshold,
        left=_build(X[mask], y[mask], depth + 1, hp),
        right=_build(X[~mask], y[~mask], depth + 1, hp),
    )


def tree_fit(X, y, hyperparams: TreeHyperparams | None = None) -> TreeModel:
    X = as_matrix(X, "X")
    y = as_labels(y, "y")
    if X.shape[0] < 1:
        raise ValueError("need at least 1 training row")
    if len(y) != X.shape[0]:
        raise ValueError(f"{X.shape[0]} rows but {len(y)} labels")
    hp = hyperparams or TreeHyperparams()
    return TreeModel(root=_build(X, y, 0, hp), n_features=X.shape[1], hyperparams=hp)


def tree_predict(model: TreeModel, X) -> np.ndarray:
    X = as_matrix(X, "X")
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"X has {X.shape[1]} features, model expects {model.n_features}"
        )
    preds = np.empty(X.shape[0], dtype=np.int64)
    for i, row in enumerate(X):
        node = model.root
        while isinstance(node, Internal):
            node = node.left if row[node.feature] <= node.threshold else node.right
        preds[i] = node.label
    return preds
