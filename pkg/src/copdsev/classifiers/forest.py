"""Bootstrap-aggregated Gini trees with per-node feature subsampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..rng import indexed_rng
from .tree import DecisionTree, TreeParams, train_decision_tree


@dataclass(frozen=True)
class ForestSpec:
    n_trees: int = 100
    max_depth: int = 10
    seed: int = 42
    max_features: Optional[int] = None  # None: floor(sqrt(d))
    min_split: int = 2

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")

    def features_for(self, d: int) -> int:
        return self.max_features if self.max_features is not None else max(1, int(math.isqrt(d)))


@dataclass
class RandomForestModel:
    spec: ForestSpec
    trees: List[DecisionTree] = field(default_factory=list)
    n_features: int = 0

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        total = np.zeros((X.shape[0], 2))
        for tree in self.trees:
            total += tree.predict_proba(X)
        return total / len(self.trees)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] > 0.5).astype(int)

    def feature_importances(self) -> np.ndarray:
        """Mean impurity decrease per feature, normalized to sum to 1."""
        imp = np.zeros(self.n_features)
        for tree in self.trees:
            internal = tree.feature >= 0
            np.add.at(imp, tree.feature[internal], tree.impurity_decrease[internal])
        s = imp.sum()
        return imp / s if s > 0 else imp


def train_random_forest(X, y, spec: ForestSpec = ForestSpec()) -> RandomForestModel:
    """Fit ``spec.n_trees`` trees, each on a bootstrap sample of size n.

    Tree ``t`` draws its bootstrap indices and node feature subsets from the
    stream ``indexed_rng(spec.seed, t)``, so each tree depends only on the
    data, the seed and its own index.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    if np.unique(y).size < 2:
        raise ValueError("degenerate training labels")
    n, d = X.shape
    params = TreeParams(max_depth=spec.max_depth, max_features=spec.features_for(d), min_split=spec.min_split)
    trees = []
    for t in range(spec.n_trees):
        rng = indexed_rng(spec.seed, t)
        boot = rng.integers(0, n, size=n)
        trees.append(train_decision_tree(X[boot], y[boot], params, rng))
    return RandomForestModel(spec, trees, d)
