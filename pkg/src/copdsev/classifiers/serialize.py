"""Versioned JSON documents for trained models.

Every document has ``format`` (always ``"copdsev-model"``), ``version``,
``kind`` and a kind-specific payload:

* ``random_forest``: ``spec`` and ``trees``, each tree a nested node object
  ``{"value": [p0, p1]}`` for leaves, plus ``feature``, ``threshold``,
  ``left`` and ``right`` for internal nodes (``x[feature] <= threshold`` goes left).
* ``knn``: ``k``, ``train_X`` (list of rows) and ``train_y``.
* ``svm``: ``gamma``, ``bias``, ``support_vectors``, ``dual_coef``
  (alpha_i * y_i), ``converged``, ``iterations`` and ``platt`` ([A, B] or null).
"""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from .forest import ForestSpec, RandomForestModel
from .knn import KNNModel
from .svm import SVMModel
from .tree import DecisionTree

FORMAT = "copdsev-model"
VERSION = 1


def model_to_dict(model) -> dict:
    doc = {"format": FORMAT, "version": VERSION}
    if isinstance(model, RandomForestModel):
        doc.update(
            kind="random_forest",
            spec=asdict(model.spec),
            n_features=model.n_features,
            trees=[t.to_dict() for t in model.trees],
        )
    elif isinstance(model, KNNModel):
        doc.update(kind="knn", k=model.k, train_X=model.train_X.tolist(), train_y=model.train_y.tolist())
    elif isinstance(model, SVMModel):
        doc.update(
            kind="svm",
            gamma=model.gamma,
            bias=model.bias,
            support_vectors=model.support_vectors.tolist(),
            dual_coef=model.dual_coef.tolist(),
            converged=model.converged,
            iterations=model.iterations,
            platt=list(model.platt) if model.platt is not None else None,
        )
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return doc


def model_from_dict(doc: dict):
    if doc.get("format") != FORMAT:
        raise ValueError("not a copdsev model document")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    kind = doc["kind"]
    if kind == "random_forest":
        return RandomForestModel(
            ForestSpec(**doc["spec"]), [DecisionTree.from_dict(t) for t in doc["trees"]], doc["n_features"]
        )
    if kind == "knn":
        return KNNModel(np.array(doc["train_X"]), np.array(doc["train_y"]), doc["k"])
    if kind == "svm":
        return SVMModel(
            support_vectors=np.array(doc["support_vectors"], dtype=float).reshape(-1, len(doc["support_vectors"][0]) if doc["support_vectors"] else 0),
            dual_coef=np.array(doc["dual_coef"], dtype=float),
            bias=doc["bias"],
            gamma=doc["gamma"],
            converged=doc["converged"],
            iterations=doc["iterations"],
            platt=tuple(doc["platt"]) if doc["platt"] is not None else None,
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path: str):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
