"""Binary classification metrics with severe (1) as the positive class."""

from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np
from scipy.stats import rankdata


class UndefinedMetricWarning(UserWarning):
    """A ratio metric had a zero denominator and was set to 0."""


class ConfusionMatrix(NamedTuple):
    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    def __add__(self, other):
        return ConfusionMatrix(*(a + b for a, b in zip(self, other)))

    def as_array(self) -> np.ndarray:
        """2x2 array with rows = true class, columns = predicted class."""
        return np.array([[self.tn, self.fp], [self.fn, self.tp]])

    def to_dict(self) -> dict:
        return self._asdict()


class RocCurve(NamedTuple):
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray


def _binary(y, name):
    y = np.asarray(y)
    if not set(np.unique(y).tolist()) <= {0, 1}:
        raise ValueError(f"{name} must be binary 0/1")
    return y.astype(int)


def confusion_matrix(y_true, y_pred) -> ConfusionMatrix:
    y_true = _binary(y_true, "y_true")
    y_pred = _binary(y_pred, "y_pred")
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.size} true vs {y_pred.size} predicted")
    return ConfusionMatrix(
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
    )


def _ratio(num, den, name):
    if den == 0:
        warnings.warn(f"{name} is undefined (zero denominator); reported as 0", UndefinedMetricWarning, stacklevel=3)
        return 0.0
    return num / den


def accuracy(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp + cm.tn, cm.total, "accuracy")


def precision(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fp, "precision")


def recall(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fn, "recall")


def f1(cm: ConfusionMatrix) -> float:
    # 2PR/(P+R) written in counts.
    return _ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn, "f1")


def _check_scores(scores, y_true):
    s = np.asarray(scores, dtype=float)
    y = _binary(y_true, "y_true")
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise ValueError("ROC needs both classes in y_true")
    return s, y, n_pos, y.size - n_pos


def roc_auc(scores, y_true) -> float:
    """Mann-Whitney statistic: P(score_pos > score_neg) + 0.5 P(tie)."""
    s, y, n_pos, n_neg = _check_scores(scores, y_true)
    ranks = rankdata(s, method="average")
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores, y_true) -> RocCurve:
    """ROC points at every distinct threshold, from (0, 0) at +inf to (1, 1).

    A point at threshold t counts scores >= t as positive.
    """
    s, y, n_pos, n_neg = _check_scores(scores, y_true)
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s.size - 1]
    tp = np.cumsum(y_sorted)[last]
    fp = (last + 1) - tp
    return RocCurve(
        fpr=np.r_[0.0, fp / n_neg],
        tpr=np.r_[0.0, tp / n_pos],
        thresholds=np.r_[np.inf, s_sorted[last]],
    )


def trapezoid_area(curve: RocCurve) -> float:
    return float(np.sum(np.diff(curve.fpr) * (curve.tpr[1:] + curve.tpr[:-1]) / 2.0))
