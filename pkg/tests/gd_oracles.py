"""Independent gradient-descent oracles for the closed-form solvers.

These deliberately avoid the package's solver code paths: plain numpy
full-batch (projected) gradient descent on the three model classes, run to
numerical convergence, so the closed forms can be checked against an
optimizer that knows nothing about pseudo-inverses.
"""

from __future__ import annotations

import numpy as np


def _lipschitz(design: np.ndarray, n_rows: int, horizon: int) -> float:
    # largest Hessian eigenvalue of mean-squared loss w.r.t. one output row
    gram = design.T @ design
    return 2.0 * float(np.linalg.eigvalsh(gram)[-1]) / (n_rows * horizon)


def gd_ols(X: np.ndarray, Y: np.ndarray, steps: int = 20000) -> tuple[np.ndarray, np.ndarray]:
    """Full-batch GD on unconstrained least squares with intercept."""
    n, length = X.shape
    horizon = Y.shape[1]
    xa = np.concatenate([X, np.ones((n, 1))], axis=1)
    lr = 1.0 / _lipschitz(xa, n, horizon)
    w = np.zeros((horizon, length + 1))
    for _ in range(steps):
        err = xa @ w.T - Y
        grad = (2.0 / (n * horizon)) * err.T @ xa
        w = w - lr * grad
    return w[:, :-1], w[:, -1]


def gd_rowsum1(X: np.ndarray, Y: np.ndarray, steps: int = 20000) -> tuple[np.ndarray, np.ndarray]:
    """Projected GD: rows of the weight matrix are re-projected onto the
    sum-to-one affine constraint after every step."""
    n, length = X.shape
    horizon = Y.shape[1]
    xa = np.concatenate([X, np.ones((n, 1))], axis=1)
    lr = 1.0 / _lipschitz(xa, n, horizon)
    a = np.full((horizon, length), 1.0 / length)  # feasible start
    b = np.zeros(horizon)
    for _ in range(steps):
        err = X @ a.T + b - Y
        ga = (2.0 / (n * horizon)) * err.T @ X
        gb = (2.0 / (n * horizon)) * err.sum(axis=0)
        a = a - lr * ga
        b = b - lr * gb
        a = a + (1.0 - a.sum(axis=1))[:, None] / length
    return a, b


def gd_sigma_bias(X: np.ndarray, Y: np.ndarray, steps: int = 20000) -> tuple[np.ndarray, np.ndarray]:
    """Projected GD for y ~ A x + b*std(x) with rows of A summing to one."""
    n, length = X.shape
    horizon = Y.shape[1]
    sigma = X.std(axis=1)
    xa = np.concatenate([X, sigma[:, None]], axis=1)
    lr = 1.0 / _lipschitz(xa, n, horizon)
    a = np.full((horizon, length), 1.0 / length)
    b = np.zeros(horizon)
    for _ in range(steps):
        err = X @ a.T + sigma[:, None] * b - Y
        ga = (2.0 / (n * horizon)) * err.T @ X
        gb = (2.0 / (n * horizon)) * (err * sigma[:, None]).sum(axis=0)
        a = a - lr * ga
        b = b - lr * gb
        a = a + (1.0 - a.sum(axis=1))[:, None] / length
    return a, b


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    return float(np.mean((pred - target) ** 2))
