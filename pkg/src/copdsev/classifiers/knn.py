"""Uniform-vote k-nearest-neighbours with a deterministic tie rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_K_CANDIDATES = tuple(range(1, 30, 2))


@dataclass
class KNNModel:
    train_X: np.ndarray
    train_y: np.ndarray
    k: int

    def __post_init__(self):
        self.train_X = np.asarray(self.train_X, dtype=float)
        self.train_y = np.asarray(self.train_y, dtype=np.intp)
        _check_k(self.k, self.train_X.shape[0])

    def predict_proba(self, X) -> np.ndarray:
        return knn_predict(self.train_X, self.train_y, X, self.k)[1]

    def predict(self, X) -> np.ndarray:
        return knn_predict(self.train_X, self.train_y, X, self.k)[0]


def _check_k(k, n_train):
    if k < 1 or k % 2 == 0:
        raise ValueError(f"k must be a positive odd integer, got {k}")
    if k > n_train:
        raise ValueError(f"k={k} exceeds the {n_train} training rows")


def nearest_indices(train_X, query_X, k, chunk=64) -> np.ndarray:
    """Indices of the ``k`` nearest training rows for each query, nearest first.

    Equal distances are ordered by training-row index.
    """
    train_X = np.asarray(train_X, dtype=float)
    query_X = np.asarray(query_X, dtype=float)
    n = train_X.shape[0]
    out = np.empty((query_X.shape[0], k), dtype=np.intp)
    for start in range(0, query_X.shape[0], chunk):
        q = query_X[start : start + chunk]
        diff = q[:, None, :] - train_X[None, :, :]
        d2 = np.einsum("qnd,qnd->qn", diff, diff)
        if k == n:
            out[start : start + chunk] = np.argsort(d2, axis=1, kind="stable")
            continue
        part = np.argpartition(d2, k - 1, axis=1)[:, :k]
        kth = np.take_along_axis(d2, part, axis=1).max(axis=1)
        # Rows with more than k candidates at or below the k-th distance have a
        # boundary tie; only those need the full (distance, index) ordering.
        tied = (d2 <= kth[:, None]).sum(axis=1) > k
        pd = np.take_along_axis(d2, part, axis=1)
        order = np.lexsort((part, pd), axis=1)
        block = np.take_along_axis(part, order, axis=1)
        for r in np.flatnonzero(tied):
            block[r] = np.argsort(d2[r], kind="stable")[:k]
        out[start : start + chunk] = block
    return out


def votes_from_neighbors(train_y, neighbors, k):
    share1 = np.asarray(train_y)[neighbors[:, :k]].mean(axis=1)
    proba = np.column_stack([1.0 - share1, share1])
    return (share1 > 0.5).astype(int), proba


def knn_predict(train_X, train_y, query_X, k: int):
    """Return ``(labels, proportions)`` where proportions are vote shares."""
    train_X = np.asarray(train_X, dtype=float)
    _check_k(k, train_X.shape[0])
    neighbors = nearest_indices(train_X, query_X, k)
    return votes_from_neighbors(train_y, neighbors, k)


def select_k(X, y, candidates=DEFAULT_K_CANDIDATES, cv_folds: int = 5, seed: int = 42, paper_faithful: bool = False):
    """Pick the candidate with the best mean stratified-CV accuracy.

    Ties go to the smallest k. Returns ``(best_k, {k: mean accuracy})``.
    ``X`` may be a ``FeatureMatrix`` (preprocessed per fold) or a complete array.
    """
    from ..evaluation.cv import knn_accuracy_by_k

    candidates = sorted(int(k) for k in candidates)
    if not candidates:
        raise ValueError("no k candidates")
    scores = knn_accuracy_by_k(X, y, candidates, cv_folds, seed, paper_faithful)
    best = max(candidates, key=lambda k: (scores[k], -k))
    return best, scores
