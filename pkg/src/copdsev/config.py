"""Pipeline configuration.

Config files are YAML mappings; every key is optional and unknown keys are
rejected. A ``run_manifest.json`` is also accepted (its ``config`` entry is
used), which is how a previous run is replayed. See README for the grammar.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import yaml

from .classifiers import KINDS, ClassifierSpec, KNNSpec
from .classifiers.forest import ForestSpec
from .classifiers.svm import SVMSpec
from .core import NormalRanges
from .errors import ConfigError
from .evaluation.cv import MODES
from .ingestion import DEFAULT_ICD_PREFIXES, DEFAULT_ITEM_LABELS, SyntheticSpec
from .rng import stage_seed
from .semisupervised import AffinityConfig

SSL_METHODS = ("propagation", "spreading")


@dataclass(frozen=True)
class InputConfig:
    samples: Optional[str] = None  # existing samples.csv
    raw_dir: Optional[str] = None  # directory holding the four raw tables


@dataclass(frozen=True)
class ExtractionConfig:
    icd_prefixes: tuple = DEFAULT_ICD_PREFIXES
    item_labels: dict = field(default_factory=lambda: dict(DEFAULT_ITEM_LABELS))


@dataclass(frozen=True)
class SyntheticConfig:
    n_total: int = SyntheticSpec.n_total
    target_mix: Optional[tuple] = None  # None: reference label proportions
    missing_rate: float = 0.05
    seed: Optional[int] = None  # None: derived from the run seed


@dataclass(frozen=True)
class SSLConfig:
    method: str = "propagation"
    kernel: str = AffinityConfig.kernel
    gamma: Optional[float] = None
    k: int = AffinityConfig.k
    alpha: float = AffinityConfig.alpha
    tol: float = AffinityConfig.tol
    max_iter: int = AffinityConfig.max_iter

    def affinity(self) -> AffinityConfig:
        return AffinityConfig(self.kernel, self.gamma, self.k, self.alpha, self.tol, self.max_iter)


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 10
    seed: Optional[int] = None  # None: the run seed
    max_features: Optional[int] = None
    min_split: int = 2


@dataclass(frozen=True)
class KNNConfig:
    k: Optional[int] = None
    candidates: tuple = tuple(range(1, 30, 2))


@dataclass(frozen=True)
class SVMConfig:
    c: float = 1.0
    gamma: Optional[float] = None
    tol: float = 1e-3
    max_iter: Optional[int] = None
    probability: bool = True


@dataclass(frozen=True)
class ClassifiersConfig:
    enabled: tuple = KINDS
    random_forest: ForestConfig = ForestConfig()
    knn: KNNConfig = KNNConfig()
    svm: SVMConfig = SVMConfig()


@dataclass(frozen=True)
class ReportConfig:
    figures: bool = True
    figure_format: str = "png"


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 42
    mode: str = "leakage_safe"
    cv_folds: int = 5
    output_dir: str = "out"
    input: InputConfig = InputConfig()
    synthetic: SyntheticConfig = SyntheticConfig()
    ranges: NormalRanges = NormalRanges()
    extraction: ExtractionConfig = ExtractionConfig()
    ssl: SSLConfig = SSLConfig()
    classifiers: ClassifiersConfig = ClassifiersConfig()
    report: ReportConfig = ReportConfig()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds must be at least 2")
        if self.ssl.method not in SSL_METHODS:
            raise ConfigError(f"ssl.method must be one of {SSL_METHODS}")
        bad = [k for k in self.classifiers.enabled if k not in KINDS]
        if bad or not self.classifiers.enabled:
            raise ConfigError(f"classifiers.enabled must be a non-empty subset of {KINDS}")
        # Build the derived specs once so invalid values fail at load time.
        try:
            self.synthetic_spec()
            self.ssl.affinity()
            for kind in self.classifiers.enabled:
                self.classifier_spec(kind)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @property
    def paper_faithful(self) -> bool:
        return self.mode == "paper_faithful"

    def synthetic_spec(self) -> SyntheticSpec:
        s = self.synthetic
        kwargs = {"n_total": s.n_total, "missing_rate": s.missing_rate}
        kwargs["seed"] = s.seed if s.seed is not None else stage_seed(self.seed, "synth")
        if s.target_mix is not None:
            kwargs["target_mix"] = tuple(s.target_mix)
        return SyntheticSpec(**kwargs)

    def classifier_spec(self, kind: str) -> ClassifierSpec:
        c = self.classifiers
        rf = c.random_forest
        return ClassifierSpec(
            kind=kind,
            rf=ForestSpec(
                n_trees=rf.n_trees,
                max_depth=rf.max_depth,
                seed=rf.seed if rf.seed is not None else self.seed,
                max_features=rf.max_features,
                min_split=rf.min_split,
            ),
            knn=KNNSpec(k=c.knn.k, candidates=tuple(c.knn.candidates)),
            svm=SVMSpec(c=c.svm.c, gamma=c.svm.gamma, tol=c.svm.tol, max_iter=c.svm.max_iter, probability=c.svm.probability),
        )

    def to_dict(self) -> dict:
        """Plain-data form with derived seeds resolved, as written to the manifest."""
        d = _plain(asdict(self))
        d["ranges"] = self.ranges.to_dict()
        d["synthetic"]["seed"] = self.synthetic_spec().seed
        d["synthetic"]["target_mix"] = list(self.synthetic_spec().target_mix)
        d["classifiers"]["random_forest"]["seed"] = self.classifier_spec("random_forest").rf.seed
        return d


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _build(cls, data, path):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown key(s) {unknown}")
    kwargs = {}
    defaults = cls()
    for name, value in data.items():
        sub = getattr(defaults, name)
        key = f"{path}.{name}" if path else name
        if name == "ranges":
            try:
                kwargs[name] = NormalRanges.from_dict(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"ranges: {exc}") from exc
        elif hasattr(sub, "__dataclass_fields__"):
            kwargs[name] = _build(type(sub), value, key)
        elif isinstance(sub, tuple) and value is not None:
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{key}: expected a list")
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def config_from_dict(data: Optional[dict]) -> PipelineConfig:
    if data and "config" in data and "versions" in data:
        data = data["config"]
    return _build(PipelineConfig, data or {}, "")


def load_config(path: Optional[str]) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(data)


def with_overrides(cfg: PipelineConfig, seed=None, mode=None, output_dir=None) -> PipelineConfig:
    changes = {}
    if seed is not None:
        changes["seed"] = int(seed)
    if mode is not None:
        changes["mode"] = mode
    if output_dir is not None:
        changes["output_dir"] = output_dir
    try:
        return replace(cfg, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def dump_config(cfg: PipelineConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def manifest_json(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"
