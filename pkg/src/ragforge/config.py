"""One TOML config shared by every pipeline stage.

Unknown sections or keys are rejected with the failing key path so a typo
never silently falls back to a default.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .embedder import FeatureConfig, TrainConfig
from .errors import ConfigError
from .evaluation import SynthConfig
from .finetune_dataset import FinetuneConfig
from .rag_pipeline import DedupConfig, RetrievalConfig


@dataclass(frozen=True)
class PathsConfig:
    corpus: str = "sources.jsonl"
    index: str = "index.rfix"
    projection: str = "projection.rfpj"
    fixtures: str = "fixtures"
    catalog: str = ""


@dataclass(frozen=True)
class LlmConfig:
    provider: str = "scripted"
    endpoint: str = ""
    model: str = ""
    fixture_dir: str = ""
    script: tuple[str, ...] = ()
    timeout: float = 30.0
    max_in_flight: int = 4

    def __post_init__(self):
        if self.provider not in ("scripted", "http"):
            raise ValueError(f"provider must be scripted or http, got {self.provider!r}")


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8080
    ui_origin: str = "*"


_SECTION_TYPES = {
    "paths": PathsConfig,
    "features": FeatureConfig,
    "training": TrainConfig,
    "dedup": DedupConfig,
    "retrieval": RetrievalConfig,
    "finetune": FinetuneConfig,
    "synth": SynthConfig,
    "llm": LlmConfig,
    "service": ServiceConfig,
}


@dataclass(frozen=True)
class Config:
    paths: PathsConfig = field(default_factory=PathsConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    dedup: DedupConfig = field(default_factory=DedupConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    finetune: FinetuneConfig = field(default_factory=FinetuneConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)


def _build_section(name: str, cls, raw: Mapping[str, Any]):
    field_names = {f.name for f in dataclasses.fields(cls)}
    for key in raw:
        if key not in field_names:
            raise ConfigError(f"unknown config key {name}.{key}")
    kwargs = dict(raw)
    if cls is LlmConfig and "script" in kwargs:
        kwargs["script"] = tuple(str(s) for s in kwargs["script"])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config section {name}: {exc}") from exc


def config_from_dict(raw: Mapping[str, Any]) -> Config:
    sections = {}
    for name, value in raw.items():
        if name not in _SECTION_TYPES:
            raise ConfigError(f"unknown config section {name}")
        if not isinstance(value, Mapping):
            raise ConfigError(f"config section {name} must be a table")
        sections[name] = _build_section(name, _SECTION_TYPES[name], value)
    return Config(**sections)


def load_config(path: Optional[str]) -> Config:
    if path is None:
        return Config()
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(p, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file is not valid TOML: {exc}") from exc
    return config_from_dict(raw)
