"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .config import ConfigError, load_config, with_overrides
from .ingestion import cohort_to_raw_tables, write_raw_tables
from .pipeline import (
    LABELS,
    PROPAGATED,
    SAMPLES,
    StageError,
    complete_labels_from_csv,
    load_samples,
    read_labels_csv,
    run_evaluate,
    run_extract,
    run_label,
    run_pipeline,
    run_propagate,
    run_report,
    run_synth,
    stage,
    write_labels_csv,
    write_propagated_csv,
    write_reports,
    _write_samples,
)


def _common(p):
    p.add_argument("--config", help="YAML config file or a previous run_manifest.json")
    p.add_argument("--seed", type=int, help="run seed (default 42)")
    p.add_argument("--mode", choices=("leakage_safe", "paper_faithful"), help="preprocessing fit scope in CV")
    p.add_argument("--out", help="output directory (default: config output_dir)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="copdsev", description="COPD severity labeling and classification pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="build samples.csv from the four raw tables")
    _common(p)
    p.add_argument("--raw-dir", help="directory with diagnoses/d_items/chartevents/demographics CSVs")

    p = sub.add_parser("synth", help="generate a synthetic samples.csv")
    _common(p)
    p.add_argument("--n", type=int, help="number of samples")
    p.add_argument("--raw-out", help="also write the cohort as raw tables to this directory")

    p = sub.add_parser("label", help="apply the rule labeler -> labels.csv")
    _common(p)
    p.add_argument("--samples")

    p = sub.add_parser("propagate", help="complete labels by propagation/spreading -> propagated_labels.csv")
    _common(p)
    p.add_argument("--samples")
    p.add_argument("--labels")

    p = sub.add_parser("evaluate", help="cross-validate the classifiers -> metrics_<kind>.json, roc CSVs")
    _common(p)
    p.add_argument("--samples")
    p.add_argument("--labels", help="completed labels (default propagated_labels.csv)")

    p = sub.add_parser("report", help="render metrics table and figures from metrics files")
    _common(p)

    p = sub.add_parser("run", help="run all stages")
    _common(p)
    return parser


def _config(args):
    cfg = load_config(args.config)
    return with_overrides(cfg, seed=args.seed, mode=args.mode, output_dir=args.out)


def _ensure_out(cfg):
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


def _cmd_extract(args, cfg):
    out = _ensure_out(cfg)
    with stage("extract"):
        samples, warnings = run_extract(cfg, args.raw_dir)
        _write_samples(samples, os.path.join(out, SAMPLES))
    print(f"extracted {len(samples)} samples -> {os.path.join(out, SAMPLES)}; warnings {warnings.to_dict()}")


def _cmd_synth(args, cfg):
    from dataclasses import replace

    if args.n is not None:
        cfg = replace(cfg, synthetic=replace(cfg.synthetic, n_total=args.n))
    out = _ensure_out(cfg)
    with stage("synth"):
        samples = run_synth(cfg)
        _write_samples(samples, os.path.join(out, SAMPLES))
        if args.raw_out:
            write_raw_tables(cohort_to_raw_tables(samples, {**cfg.extraction.item_labels}), args.raw_out)
    print(f"generated {len(samples)} samples -> {os.path.join(out, SAMPLES)}")


def _cmd_label(args, cfg):
    out = _ensure_out(cfg)
    with stage("label"):
        samples = load_samples(args.samples or os.path.join(out, SAMPLES))
        labels, summary = run_label(cfg, samples)
        write_labels_csv(labels, os.path.join(out, LABELS))
    print(f"labels: {summary.to_dict()}")


def _cmd_propagate(args, cfg):
    out = _ensure_out(cfg)
    with stage("propagate"):
        samples = load_samples(args.samples or os.path.join(out, SAMPLES))
        labels = read_labels_csv(args.labels or os.path.join(out, LABELS))
        if len(labels) != len(samples):
            raise ValueError(f"{len(labels)} labels for {len(samples)} samples")
        outcome = run_propagate(cfg, samples, labels)
        write_propagated_csv(outcome.chosen.labels, outcome.chosen.confidence, os.path.join(out, PROPAGATED))
    print(f"{outcome.method}: {outcome.counts}; agreement with the other method {outcome.agreement:.4f}")


def _cmd_evaluate(args, cfg):
    out = _ensure_out(cfg)
    with stage("evaluate"):
        samples = load_samples(args.samples or os.path.join(out, SAMPLES))
        labels = complete_labels_from_csv(args.labels or os.path.join(out, PROPAGATED))
        if len(labels) != len(samples):
            raise ValueError(f"{len(labels)} labels for {len(samples)} samples")
        reports = run_evaluate(cfg, samples, labels)
        write_reports(reports, out)
    for kind, r in reports.items():
        print(f"{kind}: accuracy {r.mean('accuracy'):.4f} (± {r.std('accuracy'):.4f}), "
              f"roc_auc {r.mean('roc_auc'):.4f} (± {r.std('roc_auc'):.4f})")


def _cmd_report(args, cfg):
    with stage("report"):
        written = run_report(cfg.output_dir, cfg.report.figures, cfg.report.figure_format)
    for p in written:
        print(p)


def _cmd_run(args, cfg):
    manifest = run_pipeline(cfg)
    c = manifest["counts"]
    print(f"samples {c['samples']}; labels {c['labels']}; propagated {c['propagated']}")
    print(f"artifacts in {cfg.output_dir}: {len(manifest['artifacts'])} files + run_manifest.json")


COMMANDS = {
    "extract": _cmd_extract,
    "synth": _cmd_synth,
    "label": _cmd_label,
    "propagate": _cmd_propagate,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        cfg = _config(args)
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
