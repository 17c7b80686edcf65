"""From-scratch random forest, k-NN and SVM behind one spec type."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .forest import ForestSpec, RandomForestModel, train_random_forest
from .knn import DEFAULT_K_CANDIDATES, KNNModel, knn_predict, select_k
from .platt import platt_calibrate, platt_probability
from .svm import SVMModel, SVMSpec, svm_decision, train_svm_smo
from .tree import DecisionTree, TreeParams, gini_impurity, train_decision_tree

KINDS = ("random_forest", "knn", "svm")


@dataclass(frozen=True)
class KNNSpec:
    k: Optional[int] = None  # None: chosen by select_k
    candidates: tuple = DEFAULT_K_CANDIDATES
    weights: str = "uniform"
    metric: str = "euclidean"

    def __post_init__(self):
        if self.weights != "uniform" or self.metric != "euclidean":
            raise ValueError("only uniform weights and euclidean distance are supported")
        if self.k is not None and (self.k < 1 or self.k % 2 == 0):
            raise ValueError("k must be a positive odd integer")
        if any(c < 1 or c % 2 == 0 for c in self.candidates):
            raise ValueError("k candidates must be positive odd integers")
        object.__setattr__(self, "candidates", tuple(int(c) for c in self.candidates))


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    rf: ForestSpec = field(default_factory=ForestSpec)
    knn: KNNSpec = field(default_factory=KNNSpec)
    svm: SVMSpec = field(default_factory=SVMSpec)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}")

    def params(self) -> dict:
        """Hyperparameters of the selected kind only."""
        sub = {"random_forest": self.rf, "knn": self.knn, "svm": self.svm}[self.kind]
        d = asdict(sub)
        if "candidates" in d:
            d["candidates"] = list(d["candidates"])
        return d


def fit(spec: ClassifierSpec, X, y):
    """Train the classifier named by ``spec.kind`` on a complete matrix."""
    if spec.kind == "random_forest":
        return train_random_forest(X, y, spec.rf)
    if spec.kind == "knn":
        if spec.knn.k is None:
            raise ValueError("knn spec has no k; run select_k first")
        if np.unique(y).size < 2:
            raise ValueError("degenerate training labels")
        return KNNModel(X, y, spec.knn.k)
    return train_svm_smo(X, y, spec.svm)


def ranking_scores(model, X) -> np.ndarray:
    """Scores used for ROC: raw decision values for SVM, P(severe) otherwise."""
    if isinstance(model, SVMModel):
        return model.decision_function(X)
    return model.predict_proba(X)[:, 1]


__all__ = [
    "ClassifierSpec",
    "DecisionTree",
    "ForestSpec",
    "KINDS",
    "KNNModel",
    "KNNSpec",
    "RandomForestModel",
    "SVMModel",
    "SVMSpec",
    "TreeParams",
    "fit",
    "gini_impurity",
    "knn_predict",
    "platt_calibrate",
    "platt_probability",
    "ranking_scores",
    "select_k",
    "svm_decision",
    "train_decision_tree",
    "train_random_forest",
    "train_svm_smo",
]
