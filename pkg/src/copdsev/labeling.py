"""Rule-based severity labeling from the five blood-gas parameters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import BLOOD_GAS, NormalRanges, PatientSample, SeverityLabel


@dataclass(frozen=True)
class LabelSummary:
    n_mild: int
    n_severe: int
    n_unlabeled: int

    @property
    def total(self) -> int:
        return self.n_mild + self.n_severe + self.n_unlabeled

    def to_dict(self) -> dict:
        return {"mild_to_moderate": self.n_mild, "severe": self.n_severe, "unlabeled": self.n_unlabeled}


def classify_severity(sample: PatientSample, ranges: NormalRanges = NormalRanges()) -> SeverityLabel:
    """Apply the group-classification cascade to one sample.

    The cascade is evaluated in order and the first matching branch wins:

    1. all five parameters inside their ranges -> mild to moderate
    2. pH inside and any of PCO2, TCO2, BE inside -> mild to moderate
    3. all five parameters outside -> severe
    4. pH outside and any of PCO2, TCO2, BE outside -> severe
    5. otherwise unlabeled

    PO2 takes part only in the all-inside/all-outside branches. A sample with
    any of the five parameters missing is unlabeled.
    """
    values = {name: sample.measurement(name) for name in BLOOD_GAS}
    if any(v is None for v in values.values()):
        return SeverityLabel.UNLABELED
    inside = {name: values[name] in getattr(ranges, name) for name in BLOOD_GAS}

    if all(inside.values()):
        return SeverityLabel.MILD_TO_MODERATE
    if inside["ph"] and (inside["pco2"] or inside["tco2"] or inside["be"]):
        return SeverityLabel.MILD_TO_MODERATE
    if not any(inside.values()):
        return SeverityLabel.SEVERE
    if not inside["ph"] and (not inside["pco2"] or not inside["tco2"] or not inside["be"]):
        return SeverityLabel.SEVERE
    return SeverityLabel.UNLABELED


def label_dataset(samples: Sequence[PatientSample], ranges: NormalRanges = NormalRanges()):
    labels = [classify_severity(s, ranges) for s in samples]
    summary = LabelSummary(
        n_mild=sum(1 for l in labels if l is SeverityLabel.MILD_TO_MODERATE),
        n_severe=sum(1 for l in labels if l is SeverityLabel.SEVERE),
        n_unlabeled=sum(1 for l in labels if l is SeverityLabel.UNLABELED),
    )
    return labels, summary
