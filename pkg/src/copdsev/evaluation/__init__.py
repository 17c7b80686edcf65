"""Fold assignment, metrics and cross-validation.

``cv`` imports the classifiers, which in turn import ``folds`` lazily, so only
the leaf modules are re-exported here.
"""

from .folds import FoldAssignment, stratified_kfold
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
    trapezoid_area,
)

__all__ = [
    "ConfusionMatrix",
    "FoldAssignment",
    "RocCurve",
    "UndefinedMetricWarning",
    "accuracy",
    "confusion_matrix",
    "f1",
    "precision",
    "recall",
    "roc_auc",
    "roc_curve",
    "stratified_kfold",
    "trapezoid_area",
]
