"""Closed-form least-squares fits for the three affine model classes.

Three classes appear throughout the package:

  unconstrained   y ~ A x + b
  rowsum1         y ~ A x + b          with every row of A summing to 1
  sigma_bias      y ~ A x + b*std(x)   rows of A summing to 1, bias scaled by
                                       the window's population std

The constrained fits work by centering each design row by its own mean:
for a row-sum-one matrix, A(x - m) + b = Ax + b - m, so subtracting the row
mean from both x and y leaves the residual unchanged, and on centered data
the all-ones direction lies in the null space of the design, which lets the
solution be shifted onto the constraint at no cost in training loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, EmptyDataError, UnsupportedShapeError
from .linalg import svd_pinv

CLASS_UNCONSTRAINED = "unconstrained"
CLASS_ROWSUM1 = "rowsum1"
CLASS_SIGMA_BIAS = "sigma_bias"


@dataclass(frozen=True)
class DesignPair:
    """Context matrix X (N, L) and matching targets Y (N, T)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.Y, dtype=np.float64)
        if x.ndim != 2 or y.ndim != 2:
            raise UnsupportedShapeError(f"X and Y must be 2-d, got {x.shape} and {y.shape}")
        if x.shape[0] != y.shape[0]:
            raise UnsupportedShapeError(
                f"X has {x.shape[0]} rows but Y has {y.shape[0]}"
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("design contains non-finite values")
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "Y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def context_len(self) -> int:
        return self.X.shape[1]

    @property
    def horizon(self) -> int:
        return self.Y.shape[1]


@dataclass(frozen=True)
class ClosedFormSolution:
    """Fitted weight (T, L), bias (T,), and the class the fit was run in."""

    weight: np.ndarray
    bias: np.ndarray
    class_tag: str

    def __post_init__(self):
        if self.class_tag not in (CLASS_UNCONSTRAINED, CLASS_ROWSUM1, CLASS_SIGMA_BIAS):
            raise ValueError(f"unknown class tag {self.class_tag!r}")


def _require_rows(d: DesignPair) -> None:
    if d.n == 0:
        raise EmptyDataError("cannot fit on an empty design (0 rows)")


def solve_ols(d: DesignPair, rel_cutoff: float = 1e-12) -> ClosedFormSolution:
    """Unconstrained least squares with intercept, solved through the SVD
    pseudo-inverse; rank-deficient designs get the minimum-norm solution."""
    _require_rows(d)
    ones = np.ones((d.n, 1))
    xa = np.concatenate([d.X, ones], axis=1)
    w_full = svd_pinv(xa, rel_cutoff=rel_cutoff) @ d.Y  # (L+1, T)
    return ClosedFormSolution(w_full[:-1].T.copy(), w_full[-1].copy(), CLASS_UNCONSTRAINED)


def _project_rows_to_unit_sum(a: np.ndarray) -> np.ndarray:
    length = a.shape[1]
    return a + (1.0 - a.sum(axis=1))[:, None] / length


def solve_rowsum1(d: DesignPair, rel_cutoff: float = 1e-12) -> ClosedFormSolution:
    """Least squares over matrices whose rows each sum to one, plus a free bias.

    Row-centering X and Y reduces this to an unconstrained fit whose solution
    can be shifted onto the constraint without changing the training loss.
    """
    _require_rows(d)
    mu = d.X.mean(axis=1, keepdims=True)
    centered = DesignPair(d.X - mu, d.Y - mu)
    inner = solve_ols(centered, rel_cutoff=rel_cutoff)
    a = _project_rows_to_unit_sum(inner.weight)
    return ClosedFormSolution(a, inner.bias, CLASS_ROWSUM1)


def solve_sigma_bias(d: DesignPair, rel_cutoff: float = 1e-12) -> ClosedFormSolution:
    """Least squares for y ~ A x + b*std(x) with rows of A summing to one.

    The std column is appended to the row-centered design uncentered, and no
    intercept column is used: the bias channel scales with the window std.
    """
    _require_rows(d)
    sigma = d.X.std(axis=1)
    if float(np.max(sigma, initial=0.0)) == 0.0:
        raise DegenerateDataError("every design row is constant; std-scaled bias is unidentifiable")
    mu = d.X.mean(axis=1, keepdims=True)
    xa = np.concatenate([d.X - mu, sigma[:, None]], axis=1)
    w_full = svd_pinv(xa, rel_cutoff=rel_cutoff) @ (d.Y - mu)  # (L+1, T)
    a = _project_rows_to_unit_sum(w_full[:-1].T)
    return ClosedFormSolution(a, w_full[-1].copy(), CLASS_SIGMA_BIAS)


def predict(s: ClosedFormSolution, x: np.ndarray) -> np.ndarray:
    """Apply a fitted solution to one context window."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size != s.weight.shape[1]:
        raise UnsupportedShapeError(
            f"expected a window of length {s.weight.shape[1]}, got shape {v.shape}"
        )
    if s.class_tag == CLASS_SIGMA_BIAS:
        return s.weight @ v + s.bias * v.std()
    return s.weight @ v + s.bias


def predict_batch(s: ClosedFormSolution, xs: np.ndarray) -> np.ndarray:
    """Apply a fitted solution to a batch of windows (N, L) -> (N, T)."""
    a = np.asarray(xs, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != s.weight.shape[1]:
        raise UnsupportedShapeError(
            f"expected batch of shape (N, {s.weight.shape[1]}), got {a.shape}"
        )
    out = a @ s.weight.T
    if s.class_tag == CLASS_SIGMA_BIAS:
        return out + a.std(axis=1)[:, None] * s.bias
    return out + s.bias


def fit_mse(s: ClosedFormSolution, d: DesignPair) -> float:
    """Mean squared error of a solution over a design pair."""
    resid = predict_batch(s, d.X) - d.Y
    return float(np.mean(resid * resid))
