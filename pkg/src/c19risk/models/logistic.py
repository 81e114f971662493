"""Logistic model: scoring, L2-regularized fitting, percentile calibration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ..errors import DegenerateData, EmptyDistribution, NonConvergence, SchemaMismatch
from ..features import FeatureVector


def sigmoid(x):
    """Numerically stable logistic function, scalar or array."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass
class LogisticModel:
    feature_names: tuple[str, ...]
    coefficients: np.ndarray
    intercept: float
    percentiles: Optional[np.ndarray] = None  # sorted training scores
    model_version: str = "logistic-1"

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.float64)
        if len(self.coefficients) != len(self.feature_names):
            raise ValueError("one coefficient per feature required")
        if not np.all(np.isfinite(self.coefficients)) or not np.isfinite(self.intercept):
            raise ValueError("coefficients must be finite")
        if self.percentiles is not None:
            self.percentiles = np.sort(np.asarray(self.percentiles, dtype=np.float64))

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogisticModel):
            return NotImplemented
        mine, theirs = self.percentiles, other.percentiles
        pct_equal = (mine is None) == (theirs is None) and (
            mine is None or np.array_equal(mine, theirs)
        )
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.coefficients, other.coefficients)
            and self.intercept == other.intercept
            and pct_equal
        )


def linear_score(model: LogisticModel, vector: FeatureVector) -> float:
    """Intercept + coefficient dot product; raises SchemaMismatch on name drift."""
    if vector.names != model.feature_names:
        raise SchemaMismatch(
            f"vector schema {vector.schema_id!r} does not match model features"
        )
    x = vector.as_array(model.feature_names)
    return float(model.intercept + model.coefficients @ x)


def score_logistic(model: LogisticModel, vector: FeatureVector) -> float:
    """Probability in (0, 1) for one feature vector."""
    return float(sigmoid(linear_score(model, vector)))


def score_logistic_matrix(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    """Probabilities for rows whose columns follow model.feature_names order."""
    if X.shape[1] != len(model.feature_names):
        raise SchemaMismatch(
            f"matrix has {X.shape[1]} columns, model expects {len(model.feature_names)}"
        )
    return sigmoid(model.intercept + X @ model.coefficients)


@dataclass
class LogisticTrainConfig:
    l2_lambda: float = 1.0
    tol: float = 1e-6  # gradient L2 norm
    max_iters: int = 100
    seed: int = 0  # kept for API symmetry; the solver itself is deterministic


def penalized_nll_and_grad(
    w: np.ndarray, X1: np.ndarray, y: np.ndarray, l2_lambda: float
) -> tuple[float, np.ndarray]:
    """Objective and gradient for the solver; exposed for gradient checks.

    w[0] is the intercept and is not penalized. X1 carries the leading
    all-ones column.
    """
    z = X1 @ w
    # log(1 + exp(z)) - y*z, computed stably
    nll = float(np.sum(np.logaddexp(0.0, z) - y * z))
    penalty_vec = w.copy()
    penalty_vec[0] = 0.0
    nll += 0.5 * l2_lambda * float(penalty_vec @ penalty_vec)
    p = sigmoid(z)
    grad = X1.T @ (p - y) + l2_lambda * penalty_vec
    return nll, grad


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: Sequence[str],
    config: LogisticTrainConfig = LogisticTrainConfig(),
) -> LogisticModel:
    """Full-batch Newton fit of the L2-penalized log-likelihood.

    Deterministic given the data order; stops when the gradient L2 norm
    drops to config.tol, raising NonConvergence past config.max_iters.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.min() == y.max():
        raise DegenerateData("training labels contain a single class")
    n, k = X.shape
    X1 = np.hstack([np.ones((n, 1)), X])
    w = np.zeros(k + 1)
    nll, grad = penalized_nll_and_grad(w, X1, y, config.l2_lambda)
    ridge = np.full(k + 1, config.l2_lambda)
    ridge[0] = 0.0
    for _ in range(config.max_iters):
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= config.tol:
            return LogisticModel(tuple(feature_names), w[1:].copy(), float(w[0]))
        p = sigmoid(X1 @ w)
        weights = np.maximum(p * (1.0 - p), 1e-12)
        hessian = (X1 * weights[:, None]).T @ X1
        hessian[np.diag_indices_from(hessian)] += ridge
        step = np.linalg.solve(hessian, grad)
        # backtracking keeps the objective monotone on near-separable data
        scale = 1.0
        for _ in range(40):
            w_new = w - scale * step
            nll_new, grad_new = penalized_nll_and_grad(w_new, X1, y, config.l2_lambda)
            if nll_new <= nll:
                break
            scale *= 0.5
        w, nll, grad = w_new, nll_new, grad_new
    grad_norm = float(np.linalg.norm(grad))
    if grad_norm <= config.tol:
        return LogisticModel(tuple(feature_names), w[1:].copy(), float(w[0]))
    raise NonConvergence(config.max_iters, grad_norm)


def fit_logistic_rows(
    rows: Iterable[tuple[FeatureVector, int]],
    config: LogisticTrainConfig = LogisticTrainConfig(),
) -> LogisticModel:
    """Convenience wrapper over fit_logistic for FeatureVector rows."""
    rows = list(rows)
    if not rows:
        raise DegenerateData("no training rows")
    names = rows[0][0].names
    X = np.array([vec.as_array(names) for vec, _ in rows], dtype=np.float64)
    y = np.array([int(label) for _, label in rows], dtype=np.float64)
    return fit_logistic(X, y, names, config)


# --- percentile calibration ---


def fit_percentile_map(train_scores: Iterable[float]) -> np.ndarray:
    """Sorted training-score distribution used for percentile ranking."""
    arr = np.sort(np.asarray(list(train_scores), dtype=np.float64))
    if arr.size == 0:
        raise EmptyDistribution("percentile map needs at least one training score")
    return arr


def percentile_of(percentile_map: np.ndarray, score: float) -> float:
    """100 * fraction of training scores <= score (ties count as covered)."""
    arr = np.asarray(percentile_map, dtype=np.float64)
    if arr.size == 0:
        raise EmptyDistribution("empty percentile map")
    count = int(np.searchsorted(arr, score, side="right"))
    return 100.0 * count / arr.size
