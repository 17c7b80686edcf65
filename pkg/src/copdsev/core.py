"""Shared data types: samples, labels, normal ranges and the feature matrix."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Sequence

import numpy as np

MEASUREMENTS = ("po2", "pco2", "ph", "be", "tco2", "hr", "rr", "spo2")
BLOOD_GAS = ("ph", "po2", "pco2", "be", "tco2")
VITALS = ("hr", "rr", "spo2")
FEATURE_COLUMNS = ("age", "gender", "po2", "pco2", "ph", "be", "tco2", "hr", "rr", "spo2")

# Fields that must be strictly positive when present.
_POSITIVE = ("po2", "pco2", "ph", "tco2", "hr", "rr")

CHARTTIME_FORMAT = "%Y-%m-%dT%H:%M"


class Gender(str, enum.Enum):
    FEMALE = "female"
    MALE = "male"

    @property
    def code(self) -> float:
        return 1.0 if self is Gender.MALE else 0.0

    @classmethod
    def from_code(cls, value: float) -> "Gender":
        return cls.MALE if value == 1.0 else cls.FEMALE

    @classmethod
    def parse(cls, text: str) -> "Gender":
        t = text.strip().lower()
        if t in ("m", "male"):
            return cls.MALE
        if t in ("f", "female"):
            return cls.FEMALE
        raise ValueError(f"unknown gender {text!r}")

    @property
    def short(self) -> str:
        return "M" if self is Gender.MALE else "F"


class SeverityLabel(enum.IntEnum):
    """Rule label. Numeric codes of the two classes are fixed."""

    UNLABELED = -1
    MILD_TO_MODERATE = 0
    SEVERE = 1

    def serialize(self) -> str:
        return "unlabeled" if self is SeverityLabel.UNLABELED else str(int(self))

    @classmethod
    def parse(cls, text: str) -> "SeverityLabel":
        t = text.strip().lower()
        if t == "unlabeled":
            return cls.UNLABELED
        return cls(int(t))


def parse_charttime(text: str) -> datetime:
    """Parse an ISO-8601 timestamp and truncate it to minute precision."""
    ts = datetime.fromisoformat(text.strip().replace(" ", "T"))
    return ts.replace(second=0, microsecond=0, tzinfo=None)


def format_charttime(ts: datetime) -> str:
    return ts.strftime(CHARTTIME_FORMAT)


@dataclass(frozen=True)
class PatientSample:
    icustay_id: int
    hadm_id: int
    charttime: datetime
    age: float
    gender: Gender
    po2: Optional[float] = None
    pco2: Optional[float] = None
    ph: Optional[float] = None
    be: Optional[float] = None
    tco2: Optional[float] = None
    hr: Optional[float] = None
    rr: Optional[float] = None
    spo2: Optional[float] = None

    def __post_init__(self):
        if self.icustay_id is None or self.hadm_id is None or self.charttime is None:
            raise ValueError("identifiers and charttime are required")
        if not (math.isfinite(self.age) and self.age >= 0):
            raise ValueError(f"age must be a non-negative real, got {self.age}")
        if not isinstance(self.gender, Gender):
            raise ValueError(f"gender must be a Gender, got {self.gender!r}")
        for name in MEASUREMENTS:
            v = getattr(self, name)
            if v is None:
                continue
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            if name in _POSITIVE and v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if self.spo2 is not None and not 0 <= self.spo2 <= 100:
            raise ValueError(f"spo2 must lie in [0, 100], got {self.spo2}")

    def measurement(self, name: str) -> Optional[float]:
        return getattr(self, name)


@dataclass(frozen=True)
class Interval:
    """Closed interval; both bounds count as inside."""

    low: float
    high: float

    def __post_init__(self):
        if not self.low <= self.high:
            raise ValueError(f"interval lower bound {self.low} exceeds upper bound {self.high}")

    def __contains__(self, value: float) -> bool:
        return self.low <= value <= self.high

    def as_list(self) -> list:
        return [self.low, self.high]


@dataclass(frozen=True)
class NormalRanges:
    ph: Interval = Interval(7.35, 7.45)
    po2: Interval = Interval(54.0, 67.6)
    pco2: Interval = Interval(35.0, 45.0)
    be: Interval = Interval(-3.0, 3.0)
    tco2: Interval = Interval(23.0, 29.0)

    @classmethod
    def from_dict(cls, overrides: Optional[dict] = None) -> "NormalRanges":
        overrides = dict(overrides or {})
        unknown = set(overrides) - set(BLOOD_GAS)
        if unknown:
            raise ValueError(f"unknown range keys: {sorted(unknown)}")
        kwargs = {}
        for name, bounds in overrides.items():
            low, high = bounds
            kwargs[name] = Interval(float(low), float(high))
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {name: getattr(self, name).as_list() for name in BLOOD_GAS}


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Numeric design matrix with an explicit missing-value mask.

    Masked slots hold NaN, but callers must consult ``mask`` rather than the
    values themselves.
    """

    values: np.ndarray
    mask: np.ndarray
    columns: tuple = field(default=FEATURE_COLUMNS)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        mask = np.array(self.mask, dtype=bool)
        if values.ndim != 2 or values.shape != mask.shape:
            raise ValueError(f"values {values.shape} and mask {mask.shape} must be equal 2-D shapes")
        if values.shape[1] != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} columns, got {values.shape[1]}")
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "columns", tuple(self.columns))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def take(self, rows) -> "FeatureMatrix":
        return FeatureMatrix(self.values[rows], self.mask[rows], self.columns)

    def complete(self) -> np.ndarray:
        """Return the values, refusing if any entry is still missing."""
        if self.mask.any():
            raise ValueError("feature matrix still has missing entries; impute first")
        return np.array(self.values)

    @classmethod
    def from_dense(cls, X) -> "FeatureMatrix":
        """Wrap an array; NaN marks missing. Non-clinical widths get ``x0, x1, ...`` names."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("expected a 2-D array")
        columns = FEATURE_COLUMNS if X.shape[1] == len(FEATURE_COLUMNS) else tuple(f"x{j}" for j in range(X.shape[1]))
        return cls(X, np.isnan(X), columns)

    def decode_genders(self) -> list:
        return [Gender.from_code(v) for v in self.values[:, 1]]


def encode_features(samples: Sequence[PatientSample]) -> FeatureMatrix:
    """Encode samples as rows in ``FEATURE_COLUMNS`` order (female 0, male 1)."""
    if len(samples) == 0:
        raise ValueError("empty dataset")
    n = len(samples)
    values = np.full((n, len(FEATURE_COLUMNS)), np.nan)
    mask = np.zeros((n, len(FEATURE_COLUMNS)), dtype=bool)
    for i, s in enumerate(samples):
        values[i, 0] = s.age
        values[i, 1] = s.gender.code
        for j, name in enumerate(FEATURE_COLUMNS[2:], start=2):
            v = getattr(s, name)
            if v is None:
                mask[i, j] = True
            else:
                values[i, j] = v
    return FeatureMatrix(values, mask)
