"""Stage functions and artifact files for the end-to-end run.

Stages: extract | synth -> label -> propagate -> evaluate -> report. Each
stage reads and writes plain files in the output directory, so stages can be
run one at a time from the CLI or all together by ``run_pipeline``.
"""

from __future__ import annotations

import contextlib
import csv
import glob
import json
import logging
import os
import platform
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import scipy

from . import __version__
from .config import PipelineConfig, manifest_json
from .core import SeverityLabel, encode_features
from .errors import ConfigError, DataError, NumericError
from .evaluation.cv import METRIC_NAMES, MetricsReport, cross_validate
from .ingestion import (
    DEFAULT_ITEM_LABELS,
    PivotWarnings,
    extract_samples,
    generate_synthetic_cohort,
    read_raw_tables,
    read_samples_csv,
    write_samples_csv,
)
from .labeling import label_dataset
from .preprocessing import Preprocessor
from .semisupervised import build_affinity, label_propagation, label_spreading

log = logging.getLogger(__name__)

SAMPLES = "samples.csv"
LABELS = "labels.csv"
PROPAGATED = "propagated_labels.csv"
MANIFEST = "run_manifest.json"
TABLE = "metrics_table.csv"
SUMMARY = "metrics_summary.csv"
FIGURES = "figures"


class StageError(Exception):
    """A pipeline stage failed; ``exit_code`` follows the CLI convention."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        if isinstance(cause, ConfigError):
            self.exit_code = 2
        elif isinstance(cause, (NumericError, ArithmeticError, np.linalg.LinAlgError)):
            self.exit_code = 4
        else:
            self.exit_code = 3
        super().__init__(f"{stage}: {cause}")


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (ValueError, OSError, ArithmeticError, np.linalg.LinAlgError, KeyError) as exc:
        raise StageError(name, exc) from exc


@contextlib.contextmanager
def partial_file(path: str):
    """Write to ``path.partial`` and rename into place only on success."""
    tmp = path + ".partial"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        yield fh
    os.replace(tmp, path)


def metrics_path(out: str, kind: str) -> str:
    return os.path.join(out, f"metrics_{kind}.json")


def roc_path(out: str, kind: str, fold: int) -> str:
    return os.path.join(out, f"roc_{kind}_fold{fold}.csv")


# ------------------------------------------------------------- label files

def write_labels_csv(labels, path):
    with partial_file(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_index", "label"])
        for i, label in enumerate(labels):
            w.writerow([i, SeverityLabel(int(label)).serialize()])


def read_labels_csv(path) -> List[SeverityLabel]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    labels = []
    for expected, row in enumerate(rows):
        if int(row["row_index"]) != expected:
            raise DataError(f"{os.path.basename(path)}: row_index {row['row_index']} out of order")
        labels.append(SeverityLabel.parse(row["label"]))
    return labels


def write_propagated_csv(labels, confidence, path):
    with partial_file(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_index", "label", "confidence"])
        for i, (label, conf) in enumerate(zip(labels, confidence)):
            w.writerow([i, int(label), repr(float(conf))])


def write_roc_csv(curve, path):
    with partial_file(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "fpr", "tpr"])
        for t, fpr, tpr in zip(curve.thresholds, curve.fpr, curve.tpr):
            w.writerow([repr(float(t)), repr(float(fpr)), repr(float(tpr))])


def read_roc_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["fpr"]) for r in rows]), np.array([float(r["tpr"]) for r in rows])


# ------------------------------------------------------------------ stages

def run_extract(cfg: PipelineConfig, raw_dir: Optional[str] = None):
    raw_dir = raw_dir or cfg.input.raw_dir
    if not raw_dir:
        raise ConfigError("no raw table directory configured (input.raw_dir)")
    if not os.path.isdir(raw_dir):
        raise FileNotFoundError(f"raw table directory not found: {raw_dir}")
    warnings = PivotWarnings()
    item_labels = {**DEFAULT_ITEM_LABELS, **cfg.extraction.item_labels}
    samples = extract_samples(read_raw_tables(raw_dir), cfg.extraction.icd_prefixes, item_labels, warnings)
    if not samples:
        raise DataError("extraction produced no samples")
    return samples, warnings


def run_synth(cfg: PipelineConfig):
    return generate_synthetic_cohort(cfg.synthetic_spec(), cfg.ranges)


def run_label(cfg: PipelineConfig, samples):
    return label_dataset(samples, cfg.ranges)


@dataclass
class PropagationOutcome:
    chosen: object
    other: object
    method: str
    agreement: float
    counts: Dict[str, int] = field(default_factory=dict)


def run_propagate(cfg: PipelineConfig, samples, labels) -> PropagationOutcome:
    """Complete the labels with both methods; ``cfg.ssl.method`` supplies the output."""
    X = Preprocessor().fit_transform(encode_features(samples))
    acfg = cfg.ssl.affinity()
    W = build_affinity(X, acfg)
    prop = label_propagation(X, labels, acfg, W=W)
    spread = label_spreading(X, labels, acfg, W=W)
    unlabeled = np.array([int(l) < 0 for l in labels])
    lp = np.array([int(l) for l in prop.labels])
    ls = np.array([int(l) for l in spread.labels])
    agreement = float(np.mean(lp[unlabeled] == ls[unlabeled])) if unlabeled.any() else 1.0
    chosen, other = (prop, spread) if cfg.ssl.method == "propagation" else (spread, prop)
    final = np.array([int(l) for l in chosen.labels])
    counts = {
        "unlabeled_to_mild": int(np.sum(final[unlabeled] == 0)),
        "unlabeled_to_severe": int(np.sum(final[unlabeled] == 1)),
        "mild_to_moderate": int(np.sum(final == 0)),
        "severe": int(np.sum(final == 1)),
    }
    for name, result in (("propagation", prop), ("spreading", spread)):
        if not result.converged:
            log.warning("label %s stopped at max_iter=%d before tol", name, acfg.max_iter)
    log.info("propagation/spreading agreement on unlabeled rows: %.4f", agreement)
    return PropagationOutcome(chosen, other, cfg.ssl.method, agreement, counts)


def run_evaluate(cfg: PipelineConfig, samples, labels) -> Dict[str, MetricsReport]:
    X = encode_features(samples)
    reports = {}
    for kind in cfg.classifiers.enabled:
        log.info("cross-validating %s", kind)
        reports[kind] = cross_validate(
            X, labels, cfg.classifier_spec(kind), cfg.cv_folds, cfg.seed, cfg.paper_faithful
        )
    return reports


def write_reports(reports: Dict[str, MetricsReport], out: str) -> List[str]:
    written = []
    for kind, report in reports.items():
        path = metrics_path(out, kind)
        with partial_file(path) as fh:
            fh.write(report.to_json())
        written.append(path)
        for f, curve in enumerate(report.roc):
            p = roc_path(out, kind, f)
            write_roc_csv(curve, p)
            written.append(p)
    return written


def format_cell(mean: float, std: float) -> str:
    return f"{mean:.4f} (± {std:.4f})"


def run_report(out: str, figures: bool = True, figure_format: str = "png") -> List[str]:
    """Render the metrics table and figures from the metrics files in ``out``."""
    order = {"random_forest": 0, "knn": 1, "svm": 2}
    paths = sorted(glob.glob(os.path.join(out, "metrics_*.json")))
    docs = []
    for p in paths:
        with open(p, encoding="utf-8") as fh:
            docs.append(json.load(fh))
    if not docs:
        raise FileNotFoundError(f"no metrics_*.json files in {out}")
    docs.sort(key=lambda d: order.get(d["classifier"], 99))

    written = []
    table = os.path.join(out, TABLE)
    with partial_file(table) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["classifier"] + list(METRIC_NAMES))
        for d in docs:
            name = d["classifier"]
            if name == "knn" and d.get("extra", {}).get("selected_k"):
                name = f"knn (k={d['extra']['selected_k']})"
            w.writerow([name] + [format_cell(d["metrics"][m]["mean"], d["metrics"][m]["std"]) for m in METRIC_NAMES])
    written.append(table)
    summary = os.path.join(out, SUMMARY)
    with partial_file(summary) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["classifier", "metric", "mean", "std"])
        for d in docs:
            for m in METRIC_NAMES:
                w.writerow([d["classifier"], m, repr(d["metrics"][m]["mean"]), repr(d["metrics"][m]["std"])])
    written.append(summary)

    if figures:
        from . import plotting

        fig_dir = os.path.join(out, FIGURES)
        os.makedirs(fig_dir, exist_ok=True)
        ext = figure_format
        written.append(plotting.plot_confusion_matrices(docs, os.path.join(fig_dir, f"confusion_matrices.{ext}")))
        curves = {}
        for d in docs:
            kind = d["classifier"]
            curves[kind] = [read_roc_csv(roc_path(out, kind, f)) for f in range(d["folds"])]
        written.append(plotting.plot_roc_curves(curves, docs, os.path.join(fig_dir, f"roc_curves.{ext}")))
        for d in docs:
            extra = d.get("extra", {})
            if "k_accuracy" in extra:
                written.append(
                    plotting.plot_k_search(extra["k_accuracy"], extra["selected_k"], os.path.join(fig_dir, f"knn_k_search.{ext}"))
                )
            if "feature_importance" in extra:
                written.append(
                    plotting.plot_feature_importance(extra["feature_importance"], os.path.join(fig_dir, f"feature_importance.{ext}"))
                )
    return written


def versions() -> dict:
    return {"copdsev": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage and write all artifacts plus ``run_manifest.json``.

    Raises ``StageError`` naming the failing stage.
    """
    out = cfg.output_dir
    with stage("setup"):
        os.makedirs(out, exist_ok=True)
    counts = {}

    if cfg.input.samples:
        with stage("extract"):
            samples = read_samples_csv(cfg.input.samples)
            source = "samples"
    elif cfg.input.raw_dir:
        with stage("extract"):
            samples, pivot_warnings = run_extract(cfg)
            counts["pivot_warnings"] = pivot_warnings.to_dict()
            source = "raw_tables"
    else:
        with stage("synth"):
            samples = run_synth(cfg)
            source = "synthetic"
    with stage("extract" if source != "synthetic" else "synth"):
        _write_samples(samples, os.path.join(out, SAMPLES))
    counts["samples"] = len(samples)

    with stage("label"):
        labels, summary = run_label(cfg, samples)
        write_labels_csv(labels, os.path.join(out, LABELS))
    counts["labels"] = summary.to_dict()

    with stage("propagate"):
        outcome = run_propagate(cfg, samples, labels)
        write_propagated_csv(outcome.chosen.labels, outcome.chosen.confidence, os.path.join(out, PROPAGATED))
    counts["propagated"] = outcome.counts
    counts["propagation_spreading_agreement"] = outcome.agreement

    with stage("evaluate"):
        reports = run_evaluate(cfg, samples, outcome.chosen.labels)
        artifacts = write_reports(reports, out)
    counts["selected_k"] = reports["knn"].extra.get("selected_k") if "knn" in reports else None

    with stage("report"):
        artifacts += run_report(out, cfg.report.figures, cfg.report.figure_format)

    manifest = {
        "config": cfg.to_dict(),
        "source": source,
        "versions": versions(),
        "counts": counts,
        "artifacts": sorted(os.path.relpath(p, out) for p in [os.path.join(out, SAMPLES), os.path.join(out, LABELS), os.path.join(out, PROPAGATED)] + artifacts),
    }
    with stage("report"):
        with partial_file(os.path.join(out, MANIFEST)) as fh:
            fh.write(manifest_json(manifest))
    return manifest


def _write_samples(samples, path):
    tmp = path + ".partial"
    write_samples_csv(samples, tmp)
    os.replace(tmp, path)


def load_samples(path: str):
    return read_samples_csv(path)


def complete_labels_from_csv(path: str) -> List[int]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    labels = [int(r["label"]) for r in rows]
    if any(l not in (0, 1) for l in labels):
        raise DataError(f"{os.path.basename(path)} has labels outside {{0, 1}}")
    return labels

