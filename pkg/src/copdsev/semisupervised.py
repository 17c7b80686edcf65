"""Graph-based label completion: label propagation and label spreading."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .core import SeverityLabel
from .errors import NumericError

N_CLASSES = 2


@dataclass(frozen=True)
class AffinityConfig:
    """Graph and solver settings.

    The default graph links each sample to its ``k`` nearest neighbours. For
    ``rbf``, ``gamma=None`` means ``1 / (d * pooled variance)`` of the input
    matrix. ``alpha`` is only used by label spreading.
    """

    kernel: str = "knn"
    gamma: Optional[float] = None
    k: int = 7
    alpha: float = 0.2
    tol: float = 1e-3
    max_iter: int = 1000

    def __post_init__(self):
        if self.kernel not in ("rbf", "knn"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class PropagationResult:
    labels: list
    class_distributions: np.ndarray
    iterations: int
    converged: bool

    @property
    def confidence(self) -> np.ndarray:
        return self.class_distributions.max(axis=1)


def scale_gamma(X: np.ndarray) -> float:
    """``1 / (n_features * variance of all entries)``; 1.0 for constant input."""
    var = float(np.var(X))
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


def _rbf_affinity(X, gamma, block=1024):
    n = X.shape[0]
    sq = np.einsum("ij,ij->i", X, X)
    W = np.empty((n, n))
    # Blocks are computed once for the upper triangle and mirrored, so W is
    # exactly symmetric without a second n x n buffer.
    for r0 in range(0, n, block):
        r1 = min(r0 + block, n)
        for c0 in range(r0, n, block):
            c1 = min(c0 + block, n)
            d2 = sq[r0:r1, None] + sq[None, c0:c1] - 2.0 * (X[r0:r1] @ X[c0:c1].T)
            np.maximum(d2, 0.0, out=d2)
            B = np.exp(-gamma * d2)
            if c0 == r0:
                B = np.maximum(B, B.T)
            W[r0:r1, c0:c1] = B
            W[c0:c1, r0:r1] = B.T
    np.fill_diagonal(W, 0.0)
    return W


def _knn_affinity(X, k):
    n = X.shape[0]
    k = min(k, n - 1)
    _, idx = cKDTree(X).query(X, k=k + 1)
    idx = np.atleast_2d(idx)
    rows, cols = [], []
    for i in range(n):
        nb = [j for j in idx[i] if j != i][:k]
        rows.extend([i] * len(nb))
        cols.extend(nb)
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return A.maximum(A.T).tocsr()


def build_affinity(X, cfg: AffinityConfig = AffinityConfig()):
    """Symmetric, non-negative affinity with a zero diagonal.

    ``rbf`` returns a dense array of ``exp(-gamma * |xi - xj|^2)``; ``knn``
    returns a sparse 0/1 matrix linking each point to its k nearest neighbours,
    symmetrized by elementwise max.
    """
    X = np.asarray(getattr(X, "values", X), dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("affinity needs at least two samples")
    if not np.isfinite(X).all():
        raise ValueError("affinity input has missing or non-finite entries; impute first")
    if cfg.kernel == "rbf":
        gamma = scale_gamma(X) if cfg.gamma is None else cfg.gamma
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        return _rbf_affinity(X, gamma)
    return _knn_affinity(X, cfg.k)


def _seed_matrix(partial_labels):
    codes = np.array([int(l) for l in partial_labels])
    labeled = codes >= 0
    for c in range(N_CLASSES):
        if not np.any(codes == c):
            raise ValueError(f"class unseeded: {SeverityLabel(c).name.lower()}")
    Y = np.zeros((codes.size, N_CLASSES))
    Y[labeled, codes[labeled]] = 1.0
    return codes, labeled, Y


def _degrees(W):
    return np.asarray(W.sum(axis=1)).ravel()


def _normalize_rows(F):
    sums = F.sum(axis=1, keepdims=True)
    out = np.full_like(F, 1.0 / N_CLASSES)
    np.divide(F, sums, out=out, where=sums > 0)
    return out


def _hard_labels(dist):
    # Exact ties go to the milder class.
    return [SeverityLabel.SEVERE if p1 > p0 else SeverityLabel.MILD_TO_MODERATE for p0, p1 in dist]


def label_propagation(X, partial_labels: Sequence, cfg: AffinityConfig = AffinityConfig(), W=None) -> PropagationResult:
    """Row-normalized diffusion with hard clamping of the seeded rows.

    Unlabeled rows start from the uniform prior; nodes without neighbours keep it.
    """
    codes, labeled, Y = _seed_matrix(partial_labels)
    if W is None:
        W = build_affinity(X, cfg)
    deg = _degrees(W)
    isolated = deg <= 0
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=~isolated)

    F = np.where(labeled[:, None], Y, 1.0 / N_CLASSES)
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        nxt = inv[:, None] * (W @ F)
        nxt[isolated] = F[isolated]
        nxt[labeled] = Y[labeled]
        delta = np.max(np.abs(nxt - F))
        F = nxt
        if delta < cfg.tol:
            converged = True
            break
    dist = _normalize_rows(F)
    return PropagationResult(_hard_labels(dist), dist, it, converged)


def label_spreading(X, partial_labels: Sequence, cfg: AffinityConfig = AffinityConfig(), W=None) -> PropagationResult:
    """Iterate ``F <- alpha * S F + (1 - alpha) * Y`` with ``S = D^-1/2 W D^-1/2``."""
    codes, labeled, Y = _seed_matrix(partial_labels)
    if W is None:
        W = build_affinity(X, cfg)
    deg = _degrees(W)
    dinv = np.divide(1.0, np.sqrt(deg), out=np.zeros_like(deg), where=deg > 0)

    F = Y.copy()
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        nxt = cfg.alpha * dinv[:, None] * (W @ (dinv[:, None] * F)) + (1.0 - cfg.alpha) * Y
        delta = np.max(np.abs(nxt - F))
        F = nxt
        if delta < cfg.tol:
            converged = True
            break
    dist = _normalize_rows(F)
    return PropagationResult(_hard_labels(dist), dist, it, converged)


def closed_form_spreading(W, Y, alpha: float) -> np.ndarray:
    """Dense solve of ``(I - alpha * S) F = Y``; a test oracle for small graphs."""
    W = np.asarray(W.toarray() if sp.issparse(W) else W, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = W.shape[0]
    if n > 200:
        raise ValueError("closed-form spreading is limited to n <= 200")
    deg = W.sum(axis=1)
    dinv = np.divide(1.0, np.sqrt(deg), out=np.zeros_like(deg), where=deg > 0)
    S = dinv[:, None] * W * dinv[None, :]
    try:
        return np.linalg.solve(np.eye(n) - alpha * S, Y)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"singular spreading system: {exc}") from exc
