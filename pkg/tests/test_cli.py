import csv
import filecmp
import json
import os

import pytest

from copdsev.cli import main
from copdsev.config import config_from_dict
from copdsev.errors import NumericError
from copdsev.pipeline import StageError, run_pipeline, stage

SMALL = """\
seed: 7
synthetic:
  n_total: 400
classifiers:
  random_forest: {n_trees: 10}
  knn: {candidates: [1, 3, 5]}
"""

KINDS = ("random_forest", "knn", "svm")


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(SMALL)
    return str(path)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = config_from_dict({**_small_dict(), "output_dir": str(out)})
    return out, run_pipeline(cfg)


def _small_dict():
    import yaml

    return yaml.safe_load(SMALL)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_writes_every_artifact(small_run):
    out, manifest = small_run
    for name in ["samples.csv", "labels.csv", "propagated_labels.csv", "run_manifest.json", "metrics_table.csv"]:
        assert (out / name).exists(), name
    for kind in KINDS:
        doc = json.loads((out / f"metrics_{kind}.json").read_text())
        assert doc["seed"] == 7 and doc["folds"] == 5 and doc["mode"] == "leakage_safe"
        assert [r.keys() for r in read_csv(out / f"roc_{kind}_fold0.csv")][0] == {"threshold", "fpr", "tpr"}
    for fig in ["confusion_matrices.png", "roc_curves.png", "knn_k_search.png", "feature_importance.png"]:
        assert (out / "figures" / fig).stat().st_size > 0
    assert not list(out.glob("**/*.partial"))
    assert manifest["counts"]["samples"] == 400
    assert set(manifest["artifacts"]) >= {"metrics_svm.json", "figures/roc_curves.png"}


def test_label_files_consistent(small_run):
    out, manifest = small_run
    labels = read_csv(out / "labels.csv")
    propagated = read_csv(out / "propagated_labels.csv")
    assert len(labels) == len(propagated) == 400
    for a, b in zip(labels, propagated):
        assert a["row_index"] == b["row_index"]
        if a["label"] != "unlabeled":
            assert a["label"] == b["label"]
        assert b["label"] in ("0", "1") and 0.5 <= float(b["confidence"]) <= 1.0
    c = manifest["counts"]
    assert c["labels"]["unlabeled"] == c["propagated"]["unlabeled_to_mild"] + c["propagated"]["unlabeled_to_severe"]


def test_metrics_table_format(small_run):
    out, _ = small_run
    rows = read_csv(out / "metrics_table.csv")
    assert [r["classifier"].split(" ")[0] for r in rows] == list(KINDS)
    for r in rows:
        mean, spread = r["accuracy"].split(" (± ")
        assert len(mean.split(".")[1]) == 4 and spread.endswith(")")


def test_stepwise_commands_match_run(small_run, small_config, tmp_path):
    out, _ = small_run
    step = str(tmp_path / "step")
    for cmd in ("synth", "label", "propagate", "evaluate", "report"):
        assert main([cmd, "--config", small_config, "--out", step]) == 0, cmd
    for name in ["samples.csv", "labels.csv", "propagated_labels.csv"] + [f"metrics_{k}.json" for k in KINDS]:
        assert filecmp.cmp(out / name, os.path.join(step, name), shallow=False), name


def test_manifest_replay_reproduces_outputs(small_run, tmp_path):
    out, _ = small_run
    replay = str(tmp_path / "replay")
    assert main(["run", "--config", str(out / "run_manifest.json"), "--out", replay]) == 0
    for name in ["propagated_labels.csv"] + [f"metrics_{k}.json" for k in KINDS] + [f"roc_svm_fold{i}.csv" for i in range(5)]:
        assert filecmp.cmp(out / name, os.path.join(replay, name), shallow=False), name


def test_extract_from_raw_tables(small_config, tmp_path):
    raw = str(tmp_path / "raw")
    a = str(tmp_path / "a")
    b = str(tmp_path / "b")
    assert main(["synth", "--config", small_config, "--out", a, "--raw-out", raw]) == 0
    assert main(["extract", "--config", small_config, "--out", b, "--raw-dir", raw]) == 0
    assert filecmp.cmp(os.path.join(a, "samples.csv"), os.path.join(b, "samples.csv"), shallow=False)


def test_missing_input_is_a_data_error(tmp_path, capsys):
    assert main(["label", "--out", str(tmp_path)]) == 3
    assert "stage label" in capsys.readouterr().err


def test_missing_raw_dir(tmp_path, capsys):
    assert main(["extract", "--out", str(tmp_path), "--raw-dir", str(tmp_path / "nope")]) == 3
    assert "stage extract" in capsys.readouterr().err


def test_bad_config_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("bogus: 1\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "absent.yaml")]) == 2


def test_bad_mode_rejected_by_parser():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--mode", "fast"])
    assert exc.value.code == 2


def test_stage_errors_map_to_exit_codes():
    for cause, code in [(NumericError("singular"), 4), (ValueError("bad rows"), 3), (OSError("disk"), 3)]:
        with pytest.raises(StageError) as info:
            with stage("propagate"):
                raise cause
        assert info.value.exit_code == code and info.value.stage == "propagate"


def test_overrides_reach_artifacts(small_config, tmp_path):
    out = str(tmp_path / "o")
    assert main(["synth", "--config", small_config, "--seed", "8", "--out", out]) == 0
    assert main(["label", "--config", small_config, "--out", out]) == 0
    assert main(["propagate", "--config", small_config, "--out", out]) == 0
    assert main(["evaluate", "--config", small_config, "--seed", "8", "--mode", "paper_faithful", "--out", out]) == 0
    doc = json.loads(open(os.path.join(out, "metrics_svm.json")).read())
    assert doc["seed"] == 8 and doc["mode"] == "paper_faithful"


def test_partial_file_left_on_failure(tmp_path):
    from copdsev.pipeline import partial_file

    target = tmp_path / "x.csv"
    with pytest.raises(RuntimeError):
        with partial_file(str(target)) as fh:
            fh.write("half")
            raise RuntimeError("boom")
    assert not target.exists() and (tmp_path / "x.csv.partial").exists()


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "copdsev", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("copdsev ")
