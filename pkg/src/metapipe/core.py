"""Shared numeric substrate: seeded PRNG, metrics, and split utilities.

Every stochastic operation in the package draws from the splitmix64
generator below, so results are bit-identical across runs and platforms
for a fixed seed.
"""
from __future__ import annotations

import math

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 2^-53; top 53 bits of a u64 give a uniform double in [0, 1)
_F64_SCALE = 1.0 / 9007199254740992.0


def splitmix64_mix(state: int) -> int:
    """One splitmix64 output step for the given (already advanced) state."""
    z = state & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(seed: int, stream_index: int) -> int:
    """Independent stream seed: one splitmix64 step of seed + stream_index."""
    return splitmix64_mix(((seed + stream_index) & _MASK64) + _GAMMA)


class Rng:
    """splitmix64 generator. A value type: never share one across consumers."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        return splitmix64_mix(self.state)

    def next_f64(self) -> float:
        # Top 53 bits scaled by 2^-53: the float64-exact form of value/2^64
        # that cannot round up to 1.0.
        return (self.next_u64() >> 11) * _F64_SCALE

    def next_range(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection sampling."""
        if n <= 0:
            raise ValueError(f"next_range requires n >= 1, got {n}")
        limit = ((1 << 64) // n) * n
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def spawn(self, stream_index: int) -> "Rng":
        return Rng(derive_seed(self.state, stream_index))


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Validate and return x as a finite 2-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_labels(y, name: str = "labels") -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    arr = arr.astype(np.int64)
    if not np.all((arr == 0) | (arr == 1)):
        bad = arr[(arr != 0) & (arr != 1)][0]
        raise ValueError(f"{name} must be binary 0/1, found {bad}")
    return arr


def accuracy(predicted, actual) -> float:
    """Fraction of positions where the two label vectors agree."""
    p = as_labels(predicted, "predicted")
    a = as_labels(actual, "actual")
    if len(p) != len(a):
        raise ValueError(f"length mismatch: {len(p)} vs {len(a)}")
    if len(p) == 0:
        raise ValueError("accuracy of empty label vectors is undefined")
    return float(np.count_nonzero(p == a)) / len(p)


def fisher_yates(n: int, rng: Rng) -> np.ndarray:
    """Uniform permutation of range(n)."""
    idx = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = rng.next_range(i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    return idx


def train_test_split(X, y, test_fraction: float, rng: Rng):
    """Shuffle rows and carve off the first ceil(N * test_fraction) as test.

    Returns (train_X, train_y, test_X, test_y). The output rows form an
    exact partition of the input rows.
    """
    X = as_matrix(X, "X")
    y = as_labels(y, "y")
    n = X.shape[0]
    if len(y) != n:
        raise ValueError(f"X has {n} rows but y has {len(y)} labels")
    if n < 2:
        raise ValueError(f"need at least 2 rows to split, got {n}")
    if not (0.0 < test_fraction < 1.0):
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n_test = math.ceil(n * test_fraction)
    if n_test >= n:
        raise ValueError(
            f"test_fraction {test_fraction} leaves no training rows for N={n}"
        )
    idx = fisher_yates(n, rng)
    test_idx, train_idx = idx[:n_test], idx[n_test:]
    return X[train_idx], y[train_idx], X[test_idx], y[test_idx]
