"""Stratified cross-validation of the three classifiers."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, List

import numpy as np

from ..classifiers import ClassifierSpec, fit, ranking_scores
from ..classifiers.knn import nearest_indices, votes_from_neighbors
from ..classifiers.forest import RandomForestModel
from ..classifiers.svm import SVMModel
from ..core import FeatureMatrix
from ..preprocessing import Preprocessor
from .folds import stratified_kfold
from .metrics import (
    ConfusionMatrix,
    RocCurve,
    UndefinedMetricWarning,
    accuracy,
    confusion_matrix,
    f1,
    precision,
    recall,
    roc_auc,
    roc_curve,
)

METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "roc_auc")
MODES = ("leakage_safe", "paper_faithful")


@dataclass
class MetricsReport:
    classifier: str
    folds: int
    seed: int
    mode: str
    per_fold: Dict[str, List[float]]
    confusion: ConfusionMatrix
    fold_confusion: List[ConfusionMatrix]
    roc: List[RocCurve]
    warnings: List[str] = field(default_factory=list)
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def mean(self, name: str) -> float:
        return float(np.mean(self.per_fold[name]))

    def std(self, name: str) -> float:
        # Population spread of the fold values.
        return float(np.std(self.per_fold[name]))

    def to_dict(self) -> dict:
        return {
            "classifier": self.classifier,
            "folds": self.folds,
            "seed": self.seed,
            "mode": self.mode,
            "params": self.params,
            "metrics": {
                name: {"mean": self.mean(name), "std": self.std(name), "per_fold": list(self.per_fold[name])}
                for name in METRIC_NAMES
            },
            "confusion": self.confusion.to_dict(),
            "fold_confusion": [cm.to_dict() for cm in self.fold_confusion],
            "extra": self.extra,
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _as_matrix(dataset) -> FeatureMatrix:
    return dataset if isinstance(dataset, FeatureMatrix) else FeatureMatrix.from_dense(dataset)


def _fold_data(X: FeatureMatrix, folds, paper_faithful: bool):
    """Yield (train, test, X_train, X_test) per fold, preprocessed per mode."""
    if paper_faithful:
        full = Preprocessor().fit_transform(X)
    for train, test in folds.splits():
        if paper_faithful:
            yield train, test, full[train], full[test]
        else:
            pre = Preprocessor().fit(X.take(train))
            yield train, test, pre.transform(X.take(train)), pre.transform(X.take(test))


def knn_accuracy_by_k(dataset, y, candidates, cv_folds=5, seed=42, paper_faithful=False) -> Dict[int, float]:
    """Mean CV accuracy of k-NN for each candidate k (neighbours searched once per fold)."""
    X = _as_matrix(dataset)
    y = np.asarray(y, dtype=np.intp)
    folds = stratified_kfold(y, cv_folds, seed)
    kmax = max(candidates)
    acc = {k: [] for k in candidates}
    for train, test, Xtr, Xte in _fold_data(X, folds, paper_faithful):
        if kmax > train.size:
            raise ValueError(f"k={kmax} exceeds the {train.size} training rows of a fold")
        nb = nearest_indices(Xtr, Xte, kmax)
        for k in candidates:
            pred, _ = votes_from_neighbors(y[train], nb, k)
            acc[k].append(float(np.mean(pred == y[test])))
    return {k: float(np.mean(v)) for k, v in acc.items()}


def cross_validate(dataset, labels, spec: ClassifierSpec, k: int = 5, seed: int = 42, paper_faithful: bool = False) -> MetricsReport:
    """Stratified k-fold evaluation of one classifier.

    By default the imputer and scaler are fit on each training split only;
    ``paper_faithful`` fits them once on the whole dataset. Hard labels use
    P(severe) > 0.5 (forest, k-NN) or decision > 0 (SVM); ROC uses the
    probability or the raw decision value respectively. A k-NN spec without
    ``k`` first runs ``select_k`` with the same folds seed.
    """
    X = _as_matrix(dataset)
    y = np.asarray([int(l) for l in labels], dtype=np.intp)
    if X.n_rows != y.size:
        raise ValueError(f"{X.n_rows} rows but {y.size} labels")
    if not set(np.unique(y).tolist()) <= {0, 1}:
        raise ValueError("cross-validation needs binary labels; complete unlabeled rows first")
    extra = {}
    if spec.kind == "knn" and spec.knn.k is None:
        from ..classifiers.knn import select_k

        best, scores = select_k(X, y, spec.knn.candidates, k, seed, paper_faithful)
        spec = replace(spec, knn=replace(spec.knn, k=best))
        extra["selected_k"] = best
        extra["k_accuracy"] = {str(c): s for c, s in scores.items()}

    folds = stratified_kfold(y, k, seed)
    per_fold = {name: [] for name in METRIC_NAMES}
    fold_cms, rocs, notes = [], [], []
    converged, importances = [], []
    for f, (train, test, Xtr, Xte) in enumerate(_fold_data(X, folds, paper_faithful)):
        model = fit(spec, Xtr, y[train])
        scores = ranking_scores(model, Xte)
        pred = (scores > 0).astype(int) if isinstance(model, SVMModel) else (scores > 0.5).astype(int)
        if isinstance(model, SVMModel):
            converged.append(model.converged)
        if isinstance(model, RandomForestModel):
            importances.append(model.feature_importances())
        cm = confusion_matrix(y[test], pred)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", UndefinedMetricWarning)
            values = {"accuracy": accuracy(cm), "precision": precision(cm), "recall": recall(cm), "f1": f1(cm)}
        notes.extend(f"fold {f}: {w.message}" for w in caught)
        values["roc_auc"] = roc_auc(scores, y[test])
        for name in METRIC_NAMES:
            per_fold[name].append(float(values[name]))
        fold_cms.append(cm)
        rocs.append(roc_curve(scores, y[test]))
    if importances:
        mean_imp = np.mean(importances, axis=0)
        extra["feature_importance"] = {c: float(v) for c, v in zip(X.columns, mean_imp)}
    if converged:
        extra["smo_converged"] = converged
        notes.extend(f"fold {f}: SMO hit the update cap" for f, ok in enumerate(converged) if not ok)

    total = fold_cms[0]
    for cm in fold_cms[1:]:
        total = total + cm
    return MetricsReport(
        classifier=spec.kind,
        folds=k,
        seed=seed,
        mode=MODES[1] if paper_faithful else MODES[0],
        per_fold=per_fold,
        confusion=total,
        fold_confusion=fold_cms,
        roc=rocs,
        warnings=notes,
        params=spec.params(),
        extra=extra,
    )
