"""Brute-force k-nearest-neighbors classifier.

There is no training phase: the model stores the training rows verbatim
and every prediction compares the query against all of them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import as_labels, as_matrix


@dataclass
class KnnModel:
    train_X: np.ndarray
    train_y: np.ndarray
    k: int

    def __post_init__(self):
        self.train_X = as_matrix(self.train_X, "train_X")
        self.train_y = as_labels(self.train_y, "train_y")
        n = self.train_X.shape[0]
        if len(self.train_y) != n:
            raise ValueError(f"{n} training rows but {len(self.train_y)} labels")
        if not (1 <= self.k <= n):
            raise ValueError(f"k must be in [1, {n}], got {self.k}")


def euclidean_distance(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return float(np.sqrt(np.sum((p - q) ** 2)))


def knn_suggest_k(n_train: int) -> int:
    """Rule-of-thumb neighbor count: round(sqrt(n_train)), at least 1."""
    if n_train < 1:
        raise ValueError(f"need n_train >= 1, got {n_train}")
    return max(1, round(math.sqrt(n_train)))


def knn_predict(model: KnnModel, X) -> np.ndarray:
    """Majority vote among the k nearest training rows.

    Distance ties rank the lower training index first. A tied vote drops
    the farthest of the current neighbors until a strict majority exists
    (an odd neighbor count always has one for binary labels).
    """
    X = as_matrix(X, "X")
    if X.shape[1] != model.train_X.shape[1]:
        raise ValueError(
            f"X has {X.shape[1]} features, model expects {model.train_X.shape[1]}"
        )
    if X.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    preds = np.empty(X.shape[0], dtype=np.int64)
    for i, row in enumerate(X):
        dists = np.sqrt(np.sum((model.train_X - row) ** 2, axis=1))
        order = np.argsort(dists, kind="stable")  # ties keep lower index first
        neighbors = order[: model.k]
        while True:
            ones = int(model.train_y[neighbors].sum())
            zeros = len(neighbors) - ones
            if ones != zeros:
                preds[i] = 1 if ones > zeros else 0
                break
            neighbors = neighbors[:-1]
    return preds
