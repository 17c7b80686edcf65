"""Column-mean imputation and z-score standardization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import FEATURE_COLUMNS, FeatureMatrix


@dataclass(frozen=True)
class ImputerModel:
    column_means: tuple
    columns: tuple = field(default=FEATURE_COLUMNS)

    def to_json(self) -> str:
        return json.dumps({"columns": list(self.columns), "means": list(self.column_means)})

    @classmethod
    def from_json(cls, text: str) -> "ImputerModel":
        doc = json.loads(text)
        return cls(tuple(doc["means"]), tuple(doc["columns"]))


@dataclass(frozen=True)
class ScalerModel:
    column_means: tuple
    column_stds: tuple
    columns: tuple = field(default=FEATURE_COLUMNS)

    @property
    def zero_variance(self) -> tuple:
        return tuple(s == 0.0 for s in self.column_stds)

    def to_json(self) -> str:
        return json.dumps(
            {"columns": list(self.columns), "means": list(self.column_means), "stds": list(self.column_stds)}
        )

    @classmethod
    def from_json(cls, text: str) -> "ScalerModel":
        doc = json.loads(text)
        return cls(tuple(doc["means"]), tuple(doc["stds"]), tuple(doc["columns"]))


def fit_imputer(X: FeatureMatrix) -> ImputerModel:
    observed = ~X.mask
    counts = observed.sum(axis=0)
    empty = [X.columns[j] for j in np.flatnonzero(counts == 0)]
    if empty:
        raise ValueError(f"column(s) with no observed values: {empty}")
    sums = np.where(observed, X.values, 0.0).sum(axis=0)
    return ImputerModel(tuple(float(v) for v in sums / counts), X.columns)


def apply_imputer(model: ImputerModel, X: FeatureMatrix) -> FeatureMatrix:
    if len(model.column_means) != X.n_cols:
        raise ValueError(f"imputer has {len(model.column_means)} columns, matrix has {X.n_cols}")
    values = np.where(X.mask, np.asarray(model.column_means)[None, :], X.values)
    return FeatureMatrix(values, np.zeros_like(X.mask), X.columns)


def fit_scaler(X: FeatureMatrix) -> ScalerModel:
    """Per-column mean and population (1/n) standard deviation."""
    if X.n_rows == 0:
        raise ValueError("cannot fit a scaler on an empty matrix")
    values = X.complete()
    means = values.mean(axis=0)
    stds = np.sqrt(((values - means) ** 2).mean(axis=0))
    # Rounding in the mean must not turn a constant column into tiny noise.
    constant = np.ptp(values, axis=0) == 0
    means[constant] = values[0, constant]
    stds[constant] = 0.0
    return ScalerModel(tuple(float(v) for v in means), tuple(float(v) for v in stds), X.columns)


def apply_scaler(model: ScalerModel, X: FeatureMatrix) -> FeatureMatrix:
    if len(model.column_means) != X.n_cols:
        raise ValueError(f"scaler has {len(model.column_means)} columns, matrix has {X.n_cols}")
    if X.n_rows == 0:
        raise ValueError("cannot scale an empty matrix")
    stds = np.asarray(model.column_stds)
    stds = np.where(stds == 0.0, 1.0, stds)
    values = (X.complete() - np.asarray(model.column_means)) / stds
    return FeatureMatrix(values, np.zeros_like(X.mask), X.columns)


class Preprocessor:
    """Imputer followed by scaler, fitted together on one matrix."""

    def __init__(self):
        self.imputer = None
        self.scaler = None

    def fit(self, X: FeatureMatrix) -> "Preprocessor":
        self.imputer = fit_imputer(X)
        self.scaler = fit_scaler(apply_imputer(self.imputer, X))
        return self

    def transform(self, X: FeatureMatrix) -> np.ndarray:
        return apply_scaler(self.scaler, apply_imputer(self.imputer, X)).values

    def fit_transform(self, X: FeatureMatrix) -> np.ndarray:
        return self.fit(X).transform(X)
