from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

from ..rng import seeded_rng


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_of: np.ndarray
    k: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def splits(self) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        for f in range(self.k):
            yield np.flatnonzero(self.fold_of != f), np.flatnonzero(self.fold_of == f)


def stratified_kfold(labels, k: int = 5, seed: int = 42, allow_small_classes: bool = False) -> FoldAssignment:
    """Shuffle each class with a seeded PCG64 stream and deal it round-robin.

    Classes are processed in ascending order from one stream, and the dealing
    position carries over from one class to the next so fold sizes stay
    balanced overall, not just per class. A class with fewer than ``k``
    members is an error unless ``allow_small_classes`` is set, in which case
    some folds simply receive none of it.
    """
    y = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be at least 2")
    classes, counts = np.unique(y, return_counts=True)
    small = [c for c, n in zip(classes.tolist(), counts.tolist()) if n < k]
    if small and not allow_small_classes:
        raise ValueError(f"class(es) {small} have fewer than k={k} members")
    rng = seeded_rng(seed)
    fold_of = np.empty(y.size, dtype=np.intp)
    offset = 0
    for c in classes:
        idx = rng.permutation(np.flatnonzero(y == c))
        fold_of[idx] = (offset + np.arange(idx.size)) % k
        offset = (offset + idx.size) % k
    return FoldAssignment(fold_of, k)
