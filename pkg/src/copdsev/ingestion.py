"""Wide sample table construction from MIMIC-shaped tables, and synthetic cohorts.

The raw layout mirrors four MIMIC-III tables reduced to the columns the
pipeline needs::

    diagnoses.csv     subject_id,hadm_id,seq_num,icd9_code
    d_items.csv       itemid,label
    chartevents.csv   subject_id,hadm_id,icustay_id,itemid,charttime,valuenum
    demographics.csv  hadm_id,age,gender

Samples are written as ``samples.csv`` (see ``SAMPLE_HEADER``).
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Set

import numpy as np

from .core import (
    BLOOD_GAS,
    MEASUREMENTS,
    Gender,
    Interval,
    NormalRanges,
    PatientSample,
    SeverityLabel,
    format_charttime,
    parse_charttime,
)
from .errors import ConfigError, DataError
from .labeling import classify_severity
from .rng import seeded_rng

log = logging.getLogger(__name__)

DEFAULT_ICD_PREFIXES = ("490", "491", "492", "496")

# MetaVision item labels as they appear in D_ITEMS.
DEFAULT_ITEM_LABELS = {
    "po2": "Arterial O2 pressure",
    "pco2": "Arterial CO2 Pressure",
    "ph": "PH (Arterial)",
    "be": "Arterial Base Excess",
    "tco2": "TCO2 (calc) Arterial",
    "hr": "Heart Rate",
    "rr": "Respiratory Rate",
    "spo2": "O2 saturation pulseoxymetry",
}

DEFAULT_ITEM_IDS = {
    "po2": 220224,
    "pco2": 220235,
    "ph": 223830,
    "be": 224828,
    "tco2": 225698,
    "hr": 220045,
    "rr": 220210,
    "spo2": 220277,
}

SAMPLE_HEADER = ("icustay_id", "hadm_id", "charttime", "age", "gender") + MEASUREMENTS

RAW_FILES = {
    "diagnoses": ("diagnoses.csv", ("subject_id", "hadm_id", "seq_num", "icd9_code")),
    "d_items": ("d_items.csv", ("itemid", "label")),
    "chartevents": ("chartevents.csv", ("subject_id", "hadm_id", "icustay_id", "itemid", "charttime", "valuenum")),
    "demographics": ("demographics.csv", ("hadm_id", "age", "gender")),
}

# Physiologic caps for out-of-range draws in the synthetic generator.
SYNTHETIC_CAPS = {
    "ph": (6.8, 7.8),
    "po2": (20.0, 150.0),
    "pco2": (15.0, 100.0),
    "be": (-15.0, 15.0),
    "tco2": (5.0, 50.0),
}
_DECIMALS = {"ph": 2, "po2": 1, "pco2": 1, "be": 1, "tco2": 1}

# Reference cohort label counts (mild, severe, unlabeled). They total 12,113,
# not the 12,131 sample count; the mix is normalized by their own sum.
REFERENCE_LABEL_COUNTS = (3282, 5343, 3488)
REFERENCE_SAMPLE_COUNT = 12131


class DiagnosisRow(NamedTuple):
    subject_id: int
    hadm_id: int
    seq_num: int
    icd9_code: str


class ItemRow(NamedTuple):
    itemid: int
    label: str


class ChartRow(NamedTuple):
    subject_id: int
    hadm_id: int
    icustay_id: int
    itemid: int
    charttime: datetime
    valuenum: Optional[float]


class DemographicsRow(NamedTuple):
    hadm_id: int
    age: float
    gender: Gender


@dataclass
class RawTables:
    diagnoses: List[DiagnosisRow] = field(default_factory=list)
    d_items: List[ItemRow] = field(default_factory=list)
    chartevents: List[ChartRow] = field(default_factory=list)
    demographics: List[DemographicsRow] = field(default_factory=list)

    def validate(self):
        known = {r.itemid for r in self.d_items}
        unknown = sorted({r.itemid for r in self.chartevents} - known)
        if unknown:
            raise DataError(f"chartevents itemids not present in d_items: {unknown[:10]}")


@dataclass
class PivotWarnings:
    non_finite: int = 0
    duplicates: int = 0
    out_of_domain: int = 0

    def to_dict(self) -> dict:
        return {"non_finite": self.non_finite, "duplicates": self.duplicates, "out_of_domain": self.out_of_domain}


def select_copd_admissions(diagnoses: Iterable[DiagnosisRow], icd_code_prefixes: Sequence[str] = DEFAULT_ICD_PREFIXES) -> Set[int]:
    prefixes = tuple(p.strip() for p in icd_code_prefixes if p.strip())
    if not prefixes:
        raise ConfigError("no diagnosis codes configured")
    return {r.hadm_id for r in diagnoses if r.icd9_code.strip().startswith(prefixes)}


def resolve_item_ids(d_items: Iterable[ItemRow], wanted_labels: Sequence[str]) -> Dict[str, int]:
    """Map each wanted label to its itemid by exact, case-insensitive match.

    Keys of the result are the wanted labels as given.
    """
    if not wanted_labels:
        raise ConfigError("no item labels requested")
    by_label: Dict[str, List[int]] = {}
    for row in d_items:
        by_label.setdefault(row.label.strip().lower(), []).append(row.itemid)
    resolved = {}
    for label in wanted_labels:
        ids = by_label.get(label.strip().lower(), [])
        if not ids:
            raise DataError(f"item label not found in d_items: {label!r}")
        if len(set(ids)) > 1:
            raise DataError(f"ambiguous itemid for label {label!r}: {sorted(set(ids))}")
        resolved[label] = ids[0]
    return resolved


def _in_domain(name: str, value: float) -> bool:
    if name == "be":
        return True
    if name == "spo2":
        return 0 <= value <= 100
    return value > 0


def pivot_chartevents(
    chartevents: Iterable[ChartRow],
    admissions: Set[int],
    item_map: Dict[str, int],
    demographics: Iterable[DemographicsRow],
    warnings: Optional[PivotWarnings] = None,
) -> List[PatientSample]:
    """Group chart rows by (hadm_id, charttime) into one sample per group.

    ``item_map`` maps each measurement name to its itemid. Within a group a
    repeated measurement keeps the value of the last row in file order.
    """
    missing = [m for m in MEASUREMENTS if m not in item_map]
    if missing:
        raise ConfigError(f"item map lacks measurements: {missing}")
    warnings = warnings if warnings is not None else PivotWarnings()
    field_of = {itemid: name for name, itemid in item_map.items()}

    groups: Dict[tuple, dict] = {}
    icustay: Dict[tuple, int] = {}
    for row in chartevents:
        if row.hadm_id not in admissions or row.itemid not in field_of:
            continue
        if row.valuenum is None or not math.isfinite(row.valuenum):
            warnings.non_finite += 1
            continue
        name = field_of[row.itemid]
        if not _in_domain(name, row.valuenum):
            warnings.out_of_domain += 1
            continue
        key = (row.hadm_id, row.charttime)
        group = groups.setdefault(key, {})
        icustay.setdefault(key, row.icustay_id)
        if name in group:
            warnings.duplicates += 1
        group[name] = float(row.valuenum)

    demo = {}
    for d in demographics:
        demo[d.hadm_id] = d
    absent = sorted({h for h, _ in groups} - set(demo))
    if absent:
        raise DataError(f"demographics missing for hadm_id(s): {absent}")

    for name, count in warnings.to_dict().items():
        if count:
            log.warning("pivot skipped or overwrote %d chart rows (%s)", count, name)

    samples = []
    for key in sorted(groups):
        hadm_id, charttime = key
        d = demo[hadm_id]
        samples.append(
            PatientSample(
                icustay_id=icustay[key],
                hadm_id=hadm_id,
                charttime=charttime,
                age=float(d.age),
                gender=d.gender,
                **groups[key],
            )
        )
    return samples


def extract_samples(
    tables: RawTables,
    icd_code_prefixes: Sequence[str] = DEFAULT_ICD_PREFIXES,
    item_labels: Optional[Dict[str, str]] = None,
    warnings: Optional[PivotWarnings] = None,
) -> List[PatientSample]:
    """Run the full extraction: diagnosis filter, item lookup, pivot."""
    tables.validate()
    item_labels = dict(item_labels or DEFAULT_ITEM_LABELS)
    admissions = select_copd_admissions(tables.diagnoses, icd_code_prefixes)
    by_label = resolve_item_ids(tables.d_items, [item_labels[m] for m in MEASUREMENTS])
    item_map = {m: by_label[item_labels[m]] for m in MEASUREMENTS}
    return pivot_chartevents(tables.chartevents, admissions, item_map, tables.demographics, warnings)


# --------------------------------------------------------------------- CSV io

def _opt_float(text: str) -> Optional[float]:
    text = text.strip()
    return None if text == "" else float(text)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _read_rows(path: str, columns: Sequence[str]) -> List[dict]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        absent = [c for c in columns if c not in (reader.fieldnames or [])]
        if absent:
            raise DataError(f"{os.path.basename(path)}: missing column(s) {absent}")
        return list(reader)


def read_raw_tables(directory: str) -> RawTables:
    def rows(key):
        name, cols = RAW_FILES[key]
        return _read_rows(os.path.join(directory, name), cols)

    try:
        return RawTables(
            diagnoses=[
                DiagnosisRow(int(r["subject_id"]), int(r["hadm_id"]), int(r["seq_num"]), r["icd9_code"].strip())
                for r in rows("diagnoses")
            ],
            d_items=[ItemRow(int(r["itemid"]), r["label"]) for r in rows("d_items")],
            chartevents=[
                ChartRow(
                    int(r["subject_id"]),
                    int(r["hadm_id"]),
                    int(r["icustay_id"]),
                    int(r["itemid"]),
                    parse_charttime(r["charttime"]),
                    _opt_float(r["valuenum"]),
                )
                for r in rows("chartevents")
            ],
            demographics=[
                DemographicsRow(int(r["hadm_id"]), float(r["age"]), Gender.parse(r["gender"])) for r in rows("demographics")
            ],
        )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"malformed raw table: {exc}") from exc


def write_raw_tables(tables: RawTables, directory: str):
    os.makedirs(directory, exist_ok=True)
    content = {
        "diagnoses": [list(r) for r in tables.diagnoses],
        "d_items": [list(r) for r in tables.d_items],
        "chartevents": [
            [r.subject_id, r.hadm_id, r.icustay_id, r.itemid, format_charttime(r.charttime), r.valuenum]
            for r in tables.chartevents
        ],
        "demographics": [[r.hadm_id, r.age, r.gender.short] for r in tables.demographics],
    }
    for key, (name, cols) in RAW_FILES.items():
        with open(os.path.join(directory, name), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in content[key]:
                w.writerow([_fmt(v) for v in row])


def write_samples_csv(samples: Sequence[PatientSample], path: str):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_HEADER)
        for s in samples:
            w.writerow(
                [s.icustay_id, s.hadm_id, format_charttime(s.charttime), _fmt(s.age), s.gender.short]
                + [_fmt(getattr(s, m)) for m in MEASUREMENTS]
            )


def read_samples_csv(path: str) -> List[PatientSample]:
    rows = _read_rows(path, SAMPLE_HEADER)
    try:
        return [
            PatientSample(
                icustay_id=int(r["icustay_id"]),
                hadm_id=int(r["hadm_id"]),
                charttime=parse_charttime(r["charttime"]),
                age=float(r["age"]),
                gender=Gender.parse(r["gender"]),
                **{m: _opt_float(r[m]) for m in MEASUREMENTS},
            )
            for r in rows
        ]
    except ValueError as exc:
        raise DataError(f"{os.path.basename(path)}: {exc}") from exc


# ---------------------------------------------------------------- synthetic

def _reference_mix():
    total = sum(REFERENCE_LABEL_COUNTS)
    return tuple(c / total for c in REFERENCE_LABEL_COUNTS)


@dataclass(frozen=True)
class SyntheticSpec:
    """Synthetic cohort parameters. ``target_mix`` is (mild, severe, unlabeled)."""

    n_total: int = REFERENCE_SAMPLE_COUNT
    target_mix: tuple = field(default_factory=_reference_mix)
    missing_rate: float = 0.05
    seed: int = 42

    def __post_init__(self):
        if self.n_total < 1:
            raise ConfigError("n_total must be at least 1")
        mix = tuple(float(p) for p in self.target_mix)
        if len(mix) != 3 or any(p < 0 for p in mix) or abs(sum(mix) - 1.0) > 1e-9:
            raise ConfigError(f"target_mix must be three non-negative proportions summing to 1, got {mix}")
        if not 0 <= self.missing_rate < 1:
            raise ConfigError("missing_rate must lie in [0, 1)")
        object.__setattr__(self, "target_mix", mix)


def category_counts(n: int, mix: Sequence[float]) -> List[int]:
    """Largest-remainder apportionment of ``n`` over ``mix``."""
    raw = [n * p for p in mix]
    counts = [int(math.floor(r)) for r in raw]
    order = sorted(range(len(mix)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


def _draw_inside(rng, interval: Interval) -> float:
    return rng.uniform(interval.low, interval.high)


def _draw_outside(rng, interval: Interval, caps) -> Optional[float]:
    lo_len = max(interval.low - caps[0], 0.0)
    hi_len = max(caps[1] - interval.high, 0.0)
    if lo_len + hi_len <= 0:
        return None
    u = rng.uniform(0.0, lo_len + hi_len)
    return caps[0] + u if u < lo_len else interval.high + (u - lo_len)


_COMPANIONS = ("pco2", "tco2", "be")


def _inside_pattern(rng, category: SeverityLabel) -> dict:
    pattern = {"po2": bool(rng.random() < 0.5)}
    if category is SeverityLabel.MILD_TO_MODERATE:
        pattern["ph"] = True
        bits = rng.random(3) < 0.6
        if not bits.any():
            bits[rng.integers(3)] = True
    elif category is SeverityLabel.SEVERE:
        pattern["ph"] = False
        bits = rng.random(3) >= 0.6
        if bits.all():
            bits[rng.integers(3)] = False
    else:
        ph_inside = bool(rng.random() < 0.5)
        pattern["ph"] = ph_inside
        bits = np.full(3, not ph_inside)
    pattern.update(zip(_COMPANIONS, (bool(b) for b in bits)))
    return pattern


# Vital-sign distributions (mean, sd, lower clip, upper clip) by underlying severity.
_VITALS = {
    SeverityLabel.MILD_TO_MODERATE: {"hr": (86.0, 12.0, 40.0, 180.0), "rr": (18.0, 3.5, 6.0, 45.0), "spo2": (95.5, 2.0, 70.0, 100.0)},
    SeverityLabel.SEVERE: {"hr": (104.0, 14.0, 40.0, 180.0), "rr": (25.0, 4.5, 6.0, 45.0), "spo2": (89.0, 3.5, 70.0, 100.0)},
}
# Share of the unlabeled group whose vitals follow the severe profile.
_UNLABELED_SEVERE_SHARE = 1389 / 3488


def _draw_sample(rng, category, ranges, missing_rate, ids) -> Optional[PatientSample]:
    pattern = _inside_pattern(rng, category)
    values = {}
    for name in BLOOD_GAS:
        interval = getattr(ranges, name)
        v = _draw_inside(rng, interval) if pattern[name] else _draw_outside(rng, interval, SYNTHETIC_CAPS[name])
        if v is None:
            return None
        values[name] = round(float(v), _DECIMALS[name])

    profile = category
    if category is SeverityLabel.UNLABELED:
        profile = SeverityLabel.SEVERE if rng.random() < _UNLABELED_SEVERE_SHARE else SeverityLabel.MILD_TO_MODERATE
    for name, (mean, sd, lo, hi) in _VITALS[profile].items():
        values[name] = round(float(np.clip(rng.normal(mean, sd), lo, hi)), 1)

    maskable = MEASUREMENTS if category is SeverityLabel.UNLABELED else ("hr", "rr", "spo2")
    drop = rng.random(len(maskable)) < missing_rate
    for name, d in zip(maskable, drop):
        if d:
            values[name] = None

    icustay_id, hadm_id, charttime, age, gender = ids
    return PatientSample(icustay_id=icustay_id, hadm_id=hadm_id, charttime=charttime, age=age, gender=gender, **values)


def generate_synthetic_cohort(spec: SyntheticSpec = SyntheticSpec(), ranges: NormalRanges = NormalRanges()) -> List[PatientSample]:
    """Draw a labeled-by-construction cohort.

    Each sample is assigned an intended rule category up front (exact counts by
    largest remainder over ``target_mix``), then its blood-gas values are drawn
    inside or outside the normal ranges so that the rule labeler reproduces the
    category. Draws the labeler disagrees with are redrawn, up to 100 times.
    """
    rng = seeded_rng(spec.seed)
    counts = category_counts(spec.n_total, spec.target_mix)
    categories = np.repeat(
        [SeverityLabel.MILD_TO_MODERATE, SeverityLabel.SEVERE, SeverityLabel.UNLABELED], counts
    )
    categories = [SeverityLabel(int(c)) for c in rng.permutation(categories)]

    samples = []
    start = datetime(2101, 1, 1)
    hadm_id, icustay_id, i = 100000, 200000, 0
    while i < spec.n_total:
        hadm_id += 1
        icustay_id += 1
        stay = min(int(rng.integers(1, 13)), spec.n_total - i)
        age = round(float(np.clip(rng.normal(69.0, 10.0), 40.0, 95.0)), 1)
        gender = Gender.MALE if rng.random() < 0.5 else Gender.FEMALE
        t0 = start + timedelta(days=int(rng.integers(0, 3650)), minutes=int(rng.integers(0, 1440)))
        for j in range(stay):
            charttime = t0 + timedelta(hours=4 * j)
            category = categories[i]
            for _ in range(100):
                s = _draw_sample(rng, category, ranges, spec.missing_rate, (icustay_id, hadm_id, charttime, age, gender))
                if s is not None and classify_severity(s, ranges) is category:
                    break
            else:
                raise ConfigError(f"cannot generate a {category.name.lower()} sample under the configured ranges")
            samples.append(s)
            i += 1
    return samples


def cohort_to_raw_tables(samples: Sequence[PatientSample], item_labels: Optional[Dict[str, str]] = None) -> RawTables:
    """Explode samples back into the four raw tables (used for fixtures and demos)."""
    item_labels = dict(item_labels or DEFAULT_ITEM_LABELS)
    d_items = [ItemRow(DEFAULT_ITEM_IDS[m], item_labels[m]) for m in MEASUREMENTS]
    diagnoses, demographics, chart = [], [], []
    seen = set()
    for s in samples:
        subject_id = s.hadm_id - 100000 + 1
        if s.hadm_id not in seen:
            seen.add(s.hadm_id)
            diagnoses.append(DiagnosisRow(subject_id, s.hadm_id, 1, "49121"))
            demographics.append(DemographicsRow(s.hadm_id, s.age, s.gender))
        for m in MEASUREMENTS:
            v = getattr(s, m)
            if v is not None:
                chart.append(ChartRow(subject_id, s.hadm_id, s.icustay_id, DEFAULT_ITEM_IDS[m], s.charttime, v))
    return RawTables(diagnoses, d_items, chart, demographics)
