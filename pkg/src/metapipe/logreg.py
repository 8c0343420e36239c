"""Binary logistic regression trained by gradient descent on the log-loss.

Two solvers share the objective: full-batch gradient descent (the
reference) and a stochastic-average-gradient variant that keeps a
per-sample gradient table and steps with the running average. The
intercept is never regularized.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Rng, as_labels, as_matrix


@dataclass
class LogRegHyperparams:
    learning_rate: float = 0.1
    max_iter: int = 1000
    tolerance: float = 1e-6
    l2_strength: float = 1e-4
    solver: str = "batch"  # "batch" | "saga"
    seed: int = 0  # drives sample order in the saga solver

    def __post_init__(self):
        if self.solver not in ("batch", "saga"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.learning_rate <= 0 or self.max_iter < 1:
            raise ValueError("learning_rate must be > 0 and max_iter >= 1")


@dataclass
class LogRegModel:
    weights: np.ndarray  # (D+1,), index 0 is the intercept
    hyperparams: LogRegHyperparams = field(default_factory=LogRegHyperparams)


def sigmoid(x):
    """1 / (1 + exp(-x)), computed branch-wise so large |x| cannot overflow."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def _design(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((X.shape[0], 1)), X])


def logreg_loss_and_grad(X, y, weights, l2_strength: float):
    """Mean log-loss with L2 penalty on the non-intercept weights.

    Returns (loss, gradient). The loss uses the softplus form
    softplus(s) - y*s, which stays finite for any finite score s.
    """
    X = as_matrix(X, "X")
    y = as_labels(y, "y")
    Xb = _design(X)
    # overflow to inf is fine here: divergence is detected via the finite
    # check on the returned loss
    with np.errstate(over="ignore", invalid="ignore"):
        s = Xb @ weights
        softplus = np.maximum(s, 0.0) + np.log1p(np.exp(-np.abs(s)))
        reg_w = weights.copy()
        reg_w[0] = 0.0
        loss = float(np.mean(softplus - y * s)) + 0.5 * l2_strength * float(reg_w @ reg_w)
        grad = Xb.T @ (sigmoid(s) - y) / len(y) + l2_strength * reg_w
    return loss, grad


def logreg_fit(X, y, hyperparams: LogRegHyperparams | None = None) -> LogRegModel:
    X = as_matrix(X, "X")
    y = as_labels(y, "y")
    n, d = X.shape
    if n < 1 or d < 1:
        raise ValueError(f"degenerate training shape {X.shape}")
    if len(y) != n:
        raise ValueError(f"{n} rows but {len(y)} labels")
    hp = hyperparams or LogRegHyperparams()
    if hp.solver == "batch":
        weights = _fit_batch(X, y, hp)
    else:
        weights = _fit_saga(X, y, hp)
    return LogRegModel(weights=weights, hyperparams=hp)


def _fit_batch(X, y, hp: LogRegHyperparams) -> np.ndarray:
    weights = np.zeros(X.shape[1] + 1)
    for it in range(hp.max_iter):
        loss, grad = logreg_loss_and_grad(X, y, weights, hp.l2_strength)
        if not np.isfinite(loss):
            raise RuntimeError(f"non-finite loss at iteration {it}")
        if np.max(np.abs(grad)) <= hp.tolerance:
            break
        weights = weights - hp.learning_rate * grad
    return weights


def _fit_saga(X, y, hp: LogRegHyperparams) -> np.ndarray:
    n = X.shape[0]
    Xb = _design(X)
    weights = np.zeros(Xb.shape[1])
    rng = Rng(hp.seed)
    # residual table sigma(s_i) - y_i at the current theta of each sample
    residuals = np.full(n, 0.5) - y
    grad_sum = Xb.T @ residuals
    for epoch in range(hp.max_iter):
        for _ in range(n):
            j = rng.next_range(n)
            r_new = float(sigmoid(float(Xb[j] @ weights))) - y[j]
            grad_sum += Xb[j] * (r_new - residuals[j])
            residuals[j] = r_new
            reg = hp.l2_strength * weights
            reg[0] = 0.0
            weights = weights - hp.learning_rate * (grad_sum / n + reg)
        loss, grad = logreg_loss_and_grad(X, y, weights, hp.l2_strength)
        if not np.isfinite(loss):
            raise RuntimeError(f"non-finite loss at epoch {epoch}")
        if np.max(np.abs(grad)) <= hp.tolerance:
            break
    return weights


def logreg_predict(model: LogRegModel, X) -> np.ndarray:
    """Label 1 iff the linear score is strictly positive (0.5 maps to 0)."""
    X = as_matrix(X, "X")
    if X.shape[1] + 1 != len(model.weights):
        raise ValueError(
            f"X has {X.shape[1]} features, model expects {len(model.weights) - 1}"
        )
    scores = _design(X) @ model.weights
    return (scores > 0).astype(np.int64)
