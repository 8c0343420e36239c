"""Principal component analysis built on an explicit symmetric eigensolver.

The decomposition pipeline is: per-feature standardization, sample
covariance of the standardized data, cyclic Jacobi eigendecomposition,
then projection onto the top-k eigenvectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import as_matrix

JACOBI_MAX_SWEEPS = 100
JACOBI_REL_TOL = 1e-11


class JacobiConvergenceError(RuntimeError):
    pass


@dataclass
class StandardizationParams:
    means: np.ndarray
    stds: np.ndarray


@dataclass
class PcaModel:
    params: StandardizationParams
    components: np.ndarray  # (k, D), rows are orthonormal principal axes
    eigenvalues: np.ndarray  # (k,), non-increasing, >= 0
    total_variance: float  # sum of all D eigenvalues


def standardize_fit(X) -> StandardizationParams:
    """Per-column mean and sample standard deviation (divisor N-1)."""
    X = as_matrix(X, "X")
    if X.shape[0] < 2:
        raise ValueError(f"need at least 2 rows to standardize, got {X.shape[0]}")
    means = X.mean(axis=0)
    stds = np.sqrt(np.sum((X - means) ** 2, axis=0) / (X.shape[0] - 1))
    return StandardizationParams(means=means, stds=stds)


def standardize_apply(X, params: StandardizationParams) -> np.ndarray:
    X = as_matrix(X, "X")
    if X.shape[1] != len(params.means):
        raise ValueError(
            f"X has {X.shape[1]} columns but params cover {len(params.means)}"
        )
    # constant columns (std 0) carry no information and map to all-zeros
    safe = np.where(params.stds > 0, params.stds, 1.0)
    z = (X - params.means) / safe
    z[:, params.stds == 0] = 0.0
    return z


def covariance_matrix(Z) -> np.ndarray:
    """Sample covariance Z^T Z / (N-1) after re-centering the columns."""
    Z = as_matrix(Z, "Z")
    n = Z.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 rows for covariance, got {n}")
    Zc = Z - Z.mean(axis=0)
    C = Zc.T @ Zc / (n - 1)
    return (C + C.T) / 2.0


def _jacobi_rotate(A: np.ndarray, V: np.ndarray, p: int, q: int) -> None:
    apq = A[p, q]
    diff = A[q, q] - A[p, p]
    if abs(apq) < abs(diff) * 1e-36:
        t = apq / diff
    else:
        theta = diff / (2.0 * apq)
        t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c

    col_p, col_q = A[:, p].copy(), A[:, q].copy()
    A[:, p] = c * col_p - s * col_q
    A[:, q] = s * col_p + c * col_q
    row_p, row_q = A[p, :].copy(), A[q, :].copy()
    A[p, :] = c * row_p - s * row_q
    A[q, :] = s * row_p + c * row_q
    A[p, q] = 0.0
    A[q, p] = 0.0

    v_p, v_q = V[:, p].copy(), V[:, q].copy()
    V[:, p] = c * v_p - s * v_q
    V[:, q] = s * v_p + c * v_q


def _max_offdiag(A: np.ndarray) -> float:
    off = A.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.max(np.abs(off))) if off.size else 0.0


def eig_symmetric(C) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted descending
    (ties keep original diagonal order) and eigenvectors as the matching
    columns. Each eigenvector is sign-canonicalized so its largest-magnitude
    entry is positive.
    """
    C = as_matrix(C, "C")
    n = C.shape[0]
    if C.shape[1] != n:
        raise ValueError(f"matrix must be square, got {C.shape}")
    if n > 0 and np.max(np.abs(C - C.T)) > 1e-9:
        raise ValueError("matrix is not symmetric within 1e-9")

    A = (C + C.T) / 2.0
    V = np.eye(n)
    tol = JACOBI_REL_TOL * float(np.linalg.norm(C, "fro"))

    sweeps = 0
    while _max_offdiag(A) > tol:
        if sweeps >= JACOBI_MAX_SWEEPS:
            raise JacobiConvergenceError(
                f"no convergence after {JACOBI_MAX_SWEEPS} sweeps; "
                f"max off-diagonal residual {_max_offdiag(A):.3e} (tol {tol:.3e})"
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] != 0.0:
                    _jacobi_rotate(A, V, p, q)
        sweeps += 1

    eigenvalues = np.diag(A).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = V[:, order]
    for j in range(n):
        lead = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[lead, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return eigenvalues, vectors


def pca_fit(X, k: int) -> PcaModel:
    """Standardize, eigendecompose the covariance, keep the top-k axes."""
    X = as_matrix(X, "X")
    n, d = X.shape
    if not (1 <= k <= d):
        raise ValueError(f"k must be in [1, {d}], got {k}")
    if n < 2:
        raise ValueError(f"need at least 2 rows to fit, got {n}")
    params = standardize_fit(X)
    Z = standardize_apply(X, params)
    C = covariance_matrix(Z)
    eigenvalues, vectors = eig_symmetric(C)
    if eigenvalues.min() < -1e-10:
        raise ValueError(
            f"covariance eigenvalue {eigenvalues.min():.3e} below -1e-10; "
            "input is numerically unsound"
        )
    eigenvalues = np.maximum(eigenvalues, 0.0)
    return PcaModel(
        params=params,
        components=vectors[:, :k].T.copy(),
        eigenvalues=eigenvalues[:k].copy(),
        total_variance=float(eigenvalues.sum()),
    )


def pca_transform(model: PcaModel, X) -> np.ndarray:
    X = as_matrix(X, "X")
    d = model.components.shape[1]
    if X.shape[1] != d:
        raise ValueError(f"X has {X.shape[1]} columns, model expects {d}")
    return standardize_apply(X, model.params) @ model.components.T


def explained_variance_ratio(model: PcaModel) -> np.ndarray:
    if model.total_variance <= 0:
        raise ValueError("total variance is zero; ratios are undefined")
    return model.eigenvalues / model.total_variance


def component_to_image(model: PcaModel, index: int, height: int, width: int) -> np.ndarray:
    """Render one principal axis as an (H, W, 3) uint8 image.

    The component row is min-max rescaled to [0, 255]; a constant row maps
    to uniform gray (128). Reshaping inverts the dataset flatten order.
    """
    k, d = model.components.shape
    if not (0 <= index < k):
        raise ValueError(f"component index must be in [0, {k}), got {index}")
    if height * width * 3 != d:
        raise ValueError(
            f"{height}x{width}x3 does not match the {d} model features"
        )
    row = model.components[index]
    lo, hi = float(row.min()), float(row.max())
    if hi == lo:
        scaled = np.full(d, 128.0)
    else:
        scaled = (row - lo) / (hi - lo) * 255.0
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8).reshape(height, width, 3)
