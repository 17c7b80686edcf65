"""Soft-margin RBF support vector machine trained by SMO.

The solver works on the dual

    min_a  1/2 a'Qa - sum(a)   s.t.  0 <= a_i <= C,  y'a = 0,   Q_ij = y_i y_j K(x_i, x_j)

and picks each working pair by the maximal-violating-pair rule with
second-order selection of the partner (Fan, Chen & Lin, 2005). It stops once
the KKT violation ``max_{I_up} -y G - min_{I_low} -y G`` drops to ``tol``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .platt import platt_calibrate, platt_probability

log = logging.getLogger(__name__)

SUPPORT_THRESHOLD = 1e-8
_TAU = 1e-12


@dataclass(frozen=True)
class SVMSpec:
    c: float = 1.0
    gamma: Optional[float] = None  # None: 1 / (d * variance of X)
    tol: float = 1e-3
    max_iter: Optional[int] = None  # None: 10 * n pair updates
    probability: bool = True

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


def rbf_kernel(A, B, gamma) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    d2 = np.einsum("ij,ij->i", A, A)[:, None] + np.einsum("ij,ij->i", B, B)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(d2, 0.0))


def scale_gamma(X) -> float:
    var = float(np.var(X))
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


@dataclass
class SVMModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for each support vector
    bias: float
    gamma: float
    converged: bool
    iterations: int
    platt: Optional[tuple] = None

    def decision_function(self, X) -> np.ndarray:
        return svm_decision(self, X)

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(int)

    def predict_proba(self, X) -> np.ndarray:
        if self.platt is None:
            raise ValueError("model was trained without probability calibration")
        p1 = platt_probability(self.decision_function(X), *self.platt)
        return np.column_stack([1.0 - p1, p1])


def _to_signed(y):
    y = np.asarray(y)
    vals = set(np.unique(y).tolist())
    if vals <= {0, 1}:
        return np.where(y == 1, 1.0, -1.0)
    if vals <= {-1, 1}:
        return y.astype(float)
    raise ValueError(f"labels must be binary, got {sorted(vals)}")


def smo_solve(K, y, c, tol, max_iter):
    """Return ``(alpha, bias, converged, iterations)`` for kernel matrix ``K``.

    ``y`` holds +1/-1. The bias follows the decision ``sum a_i y_i K + bias``.
    """
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(K).copy()
    pos = y > 0
    converged = False
    it = 0
    while it < max_iter:
        minus_yg = -y * grad
        up = np.where(pos, alpha < c, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < c)
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, minus_yg, -np.inf)))
        g_max = minus_yg[i]
        g_min = np.min(np.where(low, minus_yg, np.inf))
        if g_max - g_min <= tol:
            converged = True
            break

        Ki = K[i]
        b = g_max - minus_yg
        cand = low & (b > 0)
        a = diag[i] + diag - 2.0 * Ki
        a = np.where(a > 0, a, _TAU)
        j = int(np.argmin(np.where(cand, -(b * b) / a, np.inf)))
        Kj = K[j]

        # Move a_i by +y_i t and a_j by -y_j t; t > 0 decreases the objective.
        t = b[j] / a[j]
        t_hi_i = (c - alpha[i]) if y[i] > 0 else alpha[i]
        t_hi_j = alpha[j] if y[j] > 0 else (c - alpha[j])
        t = min(t, t_hi_i, t_hi_j)
        d_i = y[i] * t
        d_j = -y[j] * t
        alpha[i] = min(max(alpha[i] + d_i, 0.0), c)
        alpha[j] = min(max(alpha[j] + d_j, 0.0), c)
        grad += y * (y[i] * d_i * Ki + y[j] * d_j * Kj)
        it += 1

    yg = y * grad
    free = (alpha > 0) & (alpha < c)
    if free.any():
        rho = float(yg[free].mean())
    else:
        # No free vectors: rho lies between the bound-constrained estimates.
        at_c = alpha >= c
        upper_side = (at_c & ~pos) | (~at_c & pos)
        ub = yg[upper_side].min() if upper_side.any() else 0.0
        lb = yg[~upper_side].max() if (~upper_side).any() else 0.0
        rho = float((ub + lb) / 2.0)
    return alpha, -rho, converged, it


def dual_objective(alpha, K, y) -> float:
    ay = alpha * y
    return float(0.5 * ay @ K @ ay - alpha.sum())


def train_svm_smo(X, y, spec: SVMSpec = SVMSpec()) -> SVMModel:
    """Fit the RBF SVM; labels may be 0/1 or -1/+1.

    When the pair-update cap is reached the best iterate is kept and the
    model is flagged ``converged=False``. With ``spec.probability`` a Platt
    sigmoid is fit to the training decision scores.
    """
    X = np.asarray(X, dtype=float)
    ys = _to_signed(y)
    if np.unique(ys).size < 2:
        raise ValueError("degenerate training labels")
    n = X.shape[0]
    gamma = spec.gamma if spec.gamma is not None else scale_gamma(X)
    K = rbf_kernel(X, X, gamma)
    max_iter = spec.max_iter if spec.max_iter is not None else 10 * n
    alpha, bias, converged, iterations = smo_solve(K, ys, spec.c, spec.tol, max_iter)
    if not converged:
        log.warning("SMO stopped at the %d-update cap before meeting tol=%g", max_iter, spec.tol)
    keep = alpha > SUPPORT_THRESHOLD
    model = SVMModel(X[keep], alpha[keep] * ys[keep], bias, gamma, converged, iterations)
    if spec.probability:
        scores = K[:, keep] @ model.dual_coef + bias
        model.platt = platt_calibrate(scores, ys)
    return model


def svm_decision(model: SVMModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if model.support_vectors.shape[0] == 0:
        return np.full(X.shape[0], model.bias)
    out = np.empty(X.shape[0])
    for start in range(0, X.shape[0], 2048):
        block = X[start : start + 2048]
        out[start : start + 2048] = rbf_kernel(block, model.support_vectors, model.gamma) @ model.dual_coef + model.bias
    return out
