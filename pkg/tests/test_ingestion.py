import filecmp
import math
from datetime import timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from copdsev.core import BLOOD_GAS, MEASUREMENTS, Gender, NormalRanges, SeverityLabel
from copdsev.errors import ConfigError, DataError
from copdsev.ingestion import (
    DEFAULT_ITEM_IDS,
    ChartRow,
    DemographicsRow,
    DiagnosisRow,
    ItemRow,
    PivotWarnings,
    RawTables,
    SyntheticSpec,
    category_counts,
    cohort_to_raw_tables,
    extract_samples,
    generate_synthetic_cohort,
    pivot_chartevents,
    read_raw_tables,
    read_samples_csv,
    resolve_item_ids,
    select_copd_admissions,
    write_raw_tables,
    write_samples_csv,
)
from copdsev.labeling import classify_severity, label_dataset

from conftest import T0

ITEMS = dict(DEFAULT_ITEM_IDS)
DEMO = [DemographicsRow(1, 70.0, Gender.MALE), DemographicsRow(2, 55.0, Gender.FEMALE)]


def chart(hadm, itemid, value, t=T0, icustay=10):
    return ChartRow(hadm + 1000, hadm, icustay, itemid, t, value)


# ----------------------------------------------------------- admissions

def test_prefix_filter_keeps_matching_codes_only():
    rows = [DiagnosisRow(1, 11, 1, "49121"), DiagnosisRow(2, 12, 1, "4280")]
    assert select_copd_admissions(rows, ["491"]) == {11}


def test_empty_diagnoses_give_empty_set():
    assert select_copd_admissions([], ["491"]) == set()


def test_exact_code_equal_to_prefix_matches():
    assert select_copd_admissions([DiagnosisRow(1, 7, 1, "496")], ["496"]) == {7}


def test_default_prefixes():
    rows = [DiagnosisRow(1, h, 1, code) for h, code in enumerate(["4900", "4919", "4928", "496", "4939", "5000"])]
    assert select_copd_admissions(rows) == {0, 1, 2, 3}


def test_no_prefixes_is_a_config_error():
    with pytest.raises(ConfigError, match="no diagnosis codes configured"):
        select_copd_admissions([DiagnosisRow(1, 1, 1, "491")], [])


# ------------------------------------------------------------ item ids

def test_case_insensitive_label_lookup():
    assert resolve_item_ids([ItemRow(220045, "Heart Rate")], ["heart rate"]) == {"heart rate": 220045}


def test_missing_label_named_in_error():
    with pytest.raises(DataError, match="Respiratory Rate"):
        resolve_item_ids([ItemRow(220045, "Heart Rate")], ["Respiratory Rate"])


def test_duplicate_label_is_ambiguous():
    with pytest.raises(DataError, match="ambiguous itemid"):
        resolve_item_ids([ItemRow(1, "pH"), ItemRow(2, "PH")], ["ph"])


# ---------------------------------------------------------------- pivot

def test_two_rows_same_time_make_one_sample():
    rows = [chart(1, ITEMS["ph"], 7.31), chart(1, ITEMS["po2"], 58.0)]
    (s,) = pivot_chartevents(rows, {1}, ITEMS, DEMO)
    assert (s.ph, s.po2, s.pco2) == (7.31, 58.0, None)
    assert (s.age, s.gender, s.icustay_id) == (70.0, Gender.MALE, 10)


def test_distinct_times_make_distinct_samples():
    rows = [chart(1, ITEMS["ph"], 7.31), chart(1, ITEMS["ph"], 7.33, T0 + timedelta(hours=1))]
    out = pivot_chartevents(rows, {1}, ITEMS, DEMO)
    assert [s.ph for s in out] == [7.31, 7.33]


def test_duplicate_measurement_last_row_wins():
    warnings = PivotWarnings()
    rows = [chart(1, ITEMS["hr"], 90.0), chart(1, ITEMS["hr"], 95.0)]
    (s,) = pivot_chartevents(rows, {1}, ITEMS, DEMO, warnings)
    assert s.hr == 95.0
    assert warnings.duplicates == 1


def test_non_finite_values_skipped_and_counted():
    warnings = PivotWarnings()
    rows = [chart(1, ITEMS["hr"], float("nan")), chart(1, ITEMS["rr"], None), chart(1, ITEMS["ph"], 7.4)]
    (s,) = pivot_chartevents(rows, {1}, ITEMS, DEMO, warnings)
    assert warnings.non_finite == 2
    assert s.hr is None and s.ph == 7.4


def test_group_without_valid_measurement_dropped():
    rows = [chart(1, ITEMS["hr"], float("inf")), chart(1, 999999, 1.0, T0 + timedelta(hours=2))]
    assert pivot_chartevents(rows, {1}, ITEMS, DEMO) == []


def test_rows_outside_admissions_ignored():
    rows = [chart(1, ITEMS["ph"], 7.4), chart(2, ITEMS["ph"], 7.3)]
    out = pivot_chartevents(rows, {2}, ITEMS, DEMO)
    assert [s.hadm_id for s in out] == [2]


def test_missing_demographics_lists_the_admission():
    with pytest.raises(DataError, match="3"):
        pivot_chartevents([chart(3, ITEMS["ph"], 7.4)], {3}, ITEMS, DEMO)


def test_output_sorted_by_admission_then_time():
    rows = [
        chart(2, ITEMS["ph"], 7.2, T0 + timedelta(hours=1)),
        chart(1, ITEMS["ph"], 7.3, T0 + timedelta(hours=3)),
        chart(2, ITEMS["ph"], 7.4, T0),
        chart(1, ITEMS["ph"], 7.5, T0),
    ]
    out = pivot_chartevents(rows, {1, 2}, ITEMS, DEMO)
    assert [s.ph for s in out] == [7.5, 7.3, 7.4, 7.2]


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.sampled_from([1, 2]),
            st.integers(0, 4),
            st.sampled_from(list(MEASUREMENTS)),
            st.one_of(st.none(), st.just(float("nan")), st.floats(1.0, 99.0)),
        ),
        max_size=40,
    )
)
def test_sample_count_equals_groups_with_a_valid_value(events):
    rows = [chart(h, ITEMS[m], v, T0 + timedelta(hours=t)) for h, t, m, v in events]
    valid_groups = {(h, t) for h, t, _, v in events if v is not None and math.isfinite(v)}
    assert len(pivot_chartevents(rows, {1, 2}, ITEMS, DEMO)) == len(valid_groups)


def test_unknown_itemid_in_chartevents_rejected():
    tables = RawTables([DiagnosisRow(1, 1, 1, "491")], [ItemRow(1, "x")], [chart(1, 2, 1.0)], DEMO)
    with pytest.raises(DataError, match="d_items"):
        extract_samples(tables)


# ------------------------------------------------------------ round trips

def test_raw_tables_round_trip_through_extraction(tmp_path):
    cohort = generate_synthetic_cohort(SyntheticSpec(n_total=120, seed=5))
    write_raw_tables(cohort_to_raw_tables(cohort), tmp_path)
    assert extract_samples(read_raw_tables(str(tmp_path))) == cohort


def test_samples_csv_round_trip(tmp_path):
    cohort = generate_synthetic_cohort(SyntheticSpec(n_total=80, seed=2))
    path = tmp_path / "samples.csv"
    write_samples_csv(cohort, path)
    assert read_samples_csv(path) == cohort
    header = path.read_text().splitlines()[0]
    assert header == "icustay_id,hadm_id,charttime,age,gender,po2,pco2,ph,be,tco2,hr,rr,spo2"


def test_samples_csv_missing_column(tmp_path):
    path = tmp_path / "samples.csv"
    path.write_text("icustay_id,hadm_id\n1,2\n")
    with pytest.raises(DataError, match="missing column"):
        read_samples_csv(path)


def test_missing_raw_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_raw_tables(str(tmp_path))


# --------------------------------------------------------------- synthetic

def test_all_mild_mix():
    cohort = generate_synthetic_cohort(SyntheticSpec(n_total=100, target_mix=(1, 0, 0), seed=3))
    assert len(cohort) == 100
    assert all(classify_severity(s) is SeverityLabel.MILD_TO_MODERATE for s in cohort)


def test_same_seed_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_samples_csv(generate_synthetic_cohort(SyntheticSpec(n_total=300, seed=9)), a)
    write_samples_csv(generate_synthetic_cohort(SyntheticSpec(n_total=300, seed=9)), b)
    assert filecmp.cmp(a, b, shallow=False)


def test_different_seed_differs():
    a = generate_synthetic_cohort(SyntheticSpec(n_total=50, seed=1))
    b = generate_synthetic_cohort(SyntheticSpec(n_total=50, seed=2))
    assert a != b


def test_largest_remainder_counts():
    assert category_counts(10, (0.27, 0.44, 0.29)) == [3, 4, 3]
    assert sum(category_counts(12131, (0.2706, 0.4404, 0.289))) == 12131


def test_mix_recovered_exactly_at_small_scale():
    spec = SyntheticSpec(n_total=1000, seed=11)
    _, summary = label_dataset(generate_synthetic_cohort(spec))
    expected = category_counts(1000, spec.target_mix)
    assert [summary.n_mild, summary.n_severe, summary.n_unlabeled] == expected


def test_labeled_samples_have_all_decisive_values():
    cohort = generate_synthetic_cohort(SyntheticSpec(n_total=2000, missing_rate=0.3, seed=4))
    labels, _ = label_dataset(cohort)
    labeled = [s for s, l in zip(cohort, labels) if l is not SeverityLabel.UNLABELED]
    assert all(getattr(s, p) is not None for s in labeled for p in BLOOD_GAS)
    assert any(s.hr is None for s in labeled)


def test_values_respect_domain_and_caps():
    cohort = generate_synthetic_cohort(SyntheticSpec(n_total=500, seed=6))
    for s in cohort:
        if s.ph is not None:
            assert 6.8 <= s.ph <= 7.8
        if s.spo2 is not None:
            assert 0 <= s.spo2 <= 100


def test_infeasible_ranges_raise():
    wide = NormalRanges.from_dict({"ph": [6.0, 8.0]})
    with pytest.raises(ConfigError, match="severe"):
        generate_synthetic_cohort(SyntheticSpec(n_total=10, seed=1), wide)


@pytest.mark.parametrize("kwargs", [{"n_total": 0}, {"target_mix": (0.5, 0.5, 0.1)}, {"missing_rate": 1.0}])
def test_invalid_spec(kwargs):
    with pytest.raises(ConfigError):
        SyntheticSpec(**kwargs)
