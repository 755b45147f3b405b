"""Run configuration: a YAML document mapped onto nested dataclasses.

Relative paths are resolved against the directory of the config file.
Unknown keys are rejected so typos fail loudly.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .ingest import DEFAULT_SECTIONS


class ConfigError(ValueError):
    pass


@dataclass
class Paths:
    corpus: str = "corpus.csv"
    vectors: str = "embeddings.vec"
    stock: str = "prices.csv"  # price file or http(s) base URL
    reference_events: str | None = None
    keyword_classes: str | None = None
    output_dir: str | None = None
    label_cache: str | None = None


@dataclass
class IngestConfig:
    start: str = "2000-01-01"
    end: str = "2024-11-01"
    splits: list[float] | None = None  # None -> fixed cut dates
    sections: list[str] | None = field(default_factory=lambda: list(DEFAULT_SECTIONS))
    symbol: str = "SPX"


@dataclass
class ReduceConfig:
    method: str = "pca"  # or "precomputed"
    n_components: int = 5


@dataclass
class ClusterConfig:
    min_cluster_size: int = 200
    min_samples: int | None = None


@dataclass
class LabelConfig:
    method: str = "stub"  # or "llm"
    base_url: str | None = None
    model: str = "gpt-4-0613"
    top_k: int = 20
    min_interval: float = 0.0


@dataclass
class SeriesConfig:
    mode: str = "articles"
    alignment: str = "roll"
    smooth_window: int = 1


@dataclass
class BreakpointConfig:
    topic: str | None = None
    penalty: float | None = None
    min_segment_length: int = 30
    bandwidth: float | str = "auto"
    tolerance_days: int = 10


@dataclass
class SegmentConfig:
    mode: str = "midpoint"
    min_span_days: int = 30


@dataclass
class SelectConfig:
    score_direction: str = "paper"
    nd_variant: str = "clamp"
    coefficients: dict | None = None  # explicit {alpha, beta, gamma}


@dataclass
class ForecastSection:
    n_changepoints: int = 25
    changepoint_range: float = 0.8
    yearly_order: int = 10
    weekly_order: int = 3
    ridge_lambda: float = 0.1
    observed_regressors: bool = False


@dataclass
class RunConfig:
    paths: Paths = field(default_factory=Paths)
    ingest: IngestConfig = field(default_factory=IngestConfig)
    reduce: ReduceConfig = field(default_factory=ReduceConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    label: LabelConfig = field(default_factory=LabelConfig)
    series: SeriesConfig = field(default_factory=SeriesConfig)
    breakpoints: BreakpointConfig = field(default_factory=BreakpointConfig)
    segment: SegmentConfig = field(default_factory=SegmentConfig)
    select: SelectConfig = field(default_factory=SelectConfig)
    forecast: ForecastSection = field(default_factory=ForecastSection)
    seed: int = 0
    workers: int = 4
    base_dir: Path = field(default=Path("."), compare=False, repr=False)

    # -- conversion ---------------------------------------------------------

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d

    @classmethod
    def from_dict(cls, data: dict | None, base_dir: Path | str = ".") -> "RunConfig":
        data = dict(data or {})
        kwargs = {}
        for f in fields(cls):
            if f.name == "base_dir":
                continue
            if f.name not in data:
                continue
            value = data.pop(f.name)
            sub = f.default_factory if f.default_factory is not dataclasses.MISSING else None
            if sub is not None and dataclasses.is_dataclass(sub):
                kwargs[f.name] = _build(sub, value, f.name)
            else:
                kwargs[f.name] = value
        if data:
            raise ConfigError(f"unknown config keys: {sorted(data)}")
        cfg = cls(**kwargs, base_dir=Path(base_dir))
        cfg.validate()
        return cfg

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def section_hash(self, *names: str) -> str:
        blob = json.dumps({n: self.to_dict()[n] for n in names}, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def resolve(self, rel: str | None) -> Path | None:
        if rel is None:
            return None
        p = Path(rel)
        return p if p.is_absolute() else self.base_dir / p

    # -- validation ---------------------------------------------------------

    def validate(self, check_paths: bool = False) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.reduce.method in ("pca", "precomputed"), f"reduce.method {self.reduce.method!r}")
        need(self.reduce.n_components >= 1, "reduce.n_components must be >= 1")
        need(self.cluster.min_cluster_size >= 2, "cluster.min_cluster_size must be >= 2")
        need(self.label.method in ("stub", "llm"), f"label.method {self.label.method!r}")
        need(self.label.method != "llm" or self.label.base_url, "label.base_url is required for llm labels")
        need(self.series.mode in ("articles", "keywords"), f"series.mode {self.series.mode!r}")
        need(self.series.alignment in ("roll", "drop"), f"series.alignment {self.series.alignment!r}")
        need(self.series.smooth_window >= 1, "series.smooth_window must be >= 1")
        need(self.breakpoints.min_segment_length >= 1, "breakpoints.min_segment_length must be >= 1")
        need(self.breakpoints.penalty is None or self.breakpoints.penalty >= 0, "breakpoints.penalty must be >= 0")
        need(self.breakpoints.tolerance_days >= 0, "breakpoints.tolerance_days must be >= 0")
        need(self.segment.mode in ("midpoint", "direct"), f"segment.mode {self.segment.mode!r}")
        need(self.select.score_direction in ("paper", "similarity"), f"select.score_direction {self.select.score_direction!r}")
        need(self.select.nd_variant in ("clamp", "path"), f"select.nd_variant {self.select.nd_variant!r}")
        need(self.workers >= 1, "workers must be >= 1")
        if self.ingest.splits is not None:
            need(len(self.ingest.splits) == 4, "ingest.splits needs four proportions")
        if check_paths:
            for name in ("corpus", "vectors", "reference_events", "keyword_classes"):
                p = self.resolve(getattr(self.paths, name))
                need(p is None or p.exists(), f"paths.{name}: {p} does not exist")
            stock = self.paths.stock
            if not stock.startswith(("http://", "https://")):
                need(self.resolve(stock).exists(), f"paths.stock: {self.resolve(stock)} does not exist")


def _build(cls, value, name):
    if value is None:
        return cls()
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(value) - known
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    return cls(**value)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return RunConfig.from_dict(data, base_dir=path.parent)


def loads_config(text: str, base_dir: Path | str = ".") -> RunConfig:
    return RunConfig.from_dict(yaml.safe_load(text), base_dir=base_dir)
