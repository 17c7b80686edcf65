"""CART decision tree for binary labels with Gini splits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

LEAF = -1


def gini_impurity(class_counts) -> float:
    """``1 - sum(p_i^2)`` for a vector of non-negative class counts."""
    counts = np.asarray(class_counts, dtype=float)
    if np.any(counts < 0):
        raise ValueError("class counts must be non-negative")
    total = counts.sum()
    if total == 0:
        raise ValueError("gini impurity of an empty node is undefined")
    p = counts / total
    return float(1.0 - np.sum(p * p))


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 10
    max_features: Optional[int] = None  # None: all features
    min_split: int = 2

    def __post_init__(self):
        if self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be at least 1")
        if self.min_split < 2:
            raise ValueError("min_split must be at least 2")


@dataclass
class DecisionTree:
    """Flat node arrays; node 0 is the root.

    Internal nodes send ``x[feature] <= threshold`` to ``left``. Every node
    stores the class-proportion vector of the training rows that reached it.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    impurity_decrease: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        active = self.feature[node] != LEAF
        while active.any():
            r = rows[active]
            nd = node[r]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active[r] = self.feature[node[r]] != LEAF
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        def node(i):
            d = {"value": [float(v) for v in self.value[i]]}
            if self.feature[i] != LEAF:
                d.update(
                    feature=int(self.feature[i]),
                    threshold=float(self.threshold[i]),
                    left=node(self.left[i]),
                    right=node(self.right[i]),
                )
            return d

        return node(0)

    @classmethod
    def from_dict(cls, doc: dict) -> "DecisionTree":
        feature, threshold, left, right, value = [], [], [], [], []

        def visit(d):
            i = len(feature)
            feature.append(LEAF)
            threshold.append(np.nan)
            left.append(LEAF)
            right.append(LEAF)
            value.append(d["value"])
            if "feature" in d:
                feature[i] = d["feature"]
                threshold[i] = d["threshold"]
                left[i] = visit(d["left"])
                right[i] = visit(d["right"])
            return i

        visit(doc)
        n = len(feature)
        return cls(
            np.array(feature, dtype=np.intp),
            np.array(threshold, dtype=float),
            np.array(left, dtype=np.intp),
            np.array(right, dtype=np.intp),
            np.array(value, dtype=float).reshape(n, 2),
            np.zeros(n),
        )


def _best_split(X, y, rows, features):
    """Lowest weighted child Gini over midpoints of consecutive unique values.

    Ties go to the lowest feature index, then the lowest threshold. Returns
    ``(score, feature, threshold)`` with score = n * weighted child Gini, or
    ``None`` when no feature has two distinct values.
    """
    m = rows.size
    yn = y[rows]
    total1 = yn.sum()
    nl = np.arange(1, m, dtype=float)
    nr = m - nl
    best = None
    for f in features:
        x = X[rows, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        c1l = np.cumsum(yn[order])[:-1].astype(float)
        c1r = total1 - c1l
        c0l = nl - c1l
        c0r = nr - c1r
        score = (nl - (c0l * c0l + c1l * c1l) / nl) + (nr - (c0r * c0r + c1r * c1r) / nr)
        score[~valid] = np.inf
        j = int(np.argmin(score))
        if best is None or score[j] < best[0]:
            lo, hi = xs[j], xs[j + 1]
            thr = lo + (hi - lo) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best = (float(score[j]), int(f), float(thr))
    return best


def train_decision_tree(X, y, params: TreeParams = TreeParams(), rng: Optional[np.random.Generator] = None) -> DecisionTree:
    """Grow a tree depth-first (left child first).

    When ``params.max_features`` is below the feature count, each node that is
    eligible to split draws its candidate features from ``rng`` without
    replacement. A node becomes a leaf when it is pure, holds fewer than
    ``min_split`` rows, sits at ``max_depth``, or has no valid split.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    n, d = X.shape
    if n == 0:
        raise ValueError("cannot grow a tree on zero samples")
    n_feat = d if params.max_features is None else min(params.max_features, d)
    if n_feat < d and rng is None:
        raise ValueError("feature subsampling needs an rng")

    feature, threshold, left, right, value, decrease = [], [], [], [], [], []

    def new_node(rows):
        c1 = int(y[rows].sum())
        feature.append(LEAF)
        threshold.append(np.nan)
        left.append(LEAF)
        right.append(LEAF)
        value.append(((rows.size - c1) / rows.size, c1 / rows.size))
        decrease.append(0.0)
        return len(feature) - 1

    root_rows = np.arange(n)
    stack = [(new_node(root_rows), root_rows, 0)]
    while stack:
        node, rows, depth = stack.pop()
        m = rows.size
        p1 = value[node][1]
        if depth >= params.max_depth or m < params.min_split or p1 in (0.0, 1.0):
            continue
        if n_feat < d:
            features = np.sort(rng.choice(d, n_feat, replace=False))
        else:
            features = np.arange(d)
        split = _best_split(X, y, rows, features)
        if split is None:
            continue
        score, f, thr = split
        go_left = X[rows, f] <= thr
        lrows, rrows = rows[go_left], rows[~go_left]
        feature[node] = f
        threshold[node] = thr
        decrease[node] = m * gini_impurity((m * (1 - p1), m * p1)) - score
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        # Right pushed first so the left subtree is built (and numbered) first.
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))

    return DecisionTree(
        np.array(feature, dtype=np.intp),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.intp),
        np.array(right, dtype=np.intp),
        np.array(value, dtype=float).reshape(-1, 2),
        np.array(decrease, dtype=float),
    )
