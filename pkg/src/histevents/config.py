"""Pipeline configuration: one JSON file, with command-line overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .linking import SCORERS

RESOURCE_KEYS = (
    "per_gazetteer", "loc_gazetteer", "org_gazetteer",
    "semantic_types", "patterns", "class_registry", "embeddings",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    per_gazetteer: str | None = None
    loc_gazetteer: str | None = None
    org_gazetteer: str | None = None
    semantic_types: str | None = None
    patterns: str | None = None
    class_registry: str | None = None
    embeddings: str | None = None
    person_patterns: str | None = None
    knn_k: int = 9
    similarity_threshold: float = 0.4
    max_disambiguation_iterations: int = 10
    association_scorer: str = "average-normalized"
    ego_hops: int = 2

    def validate(self, required=()) -> "PipelineConfig":
        if self.knn_k < 1 or self.knn_k % 2 == 0:
            raise ConfigError(f"knn_k must be a positive odd number, got {self.knn_k}")
        if not -1.0 <= self.similarity_threshold <= 1.0:
            raise ConfigError(f"similarity_threshold must lie in [-1, 1], got {self.similarity_threshold}")
        if self.max_disambiguation_iterations < 1:
            raise ConfigError("max_disambiguation_iterations must be >= 1")
        if self.association_scorer not in SCORERS:
            raise ConfigError(f"association_scorer must be one of {sorted(SCORERS)}")
        if self.ego_hops < 0:
            raise ConfigError("ego_hops must be >= 0")
        for key in required:
            value = getattr(self, key)
            if value is None:
                raise ConfigError(f"config is missing {key!r}")
            if not Path(value).exists():
                raise ConfigError(f"{key}: no such file: {value}")
        if self.person_patterns is not None and not Path(self.person_patterns).exists():
            raise ConfigError(f"person_patterns: no such file: {self.person_patterns}")
        return self

    def override(self, **values) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in values.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from None
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    base = path.parent
    for key in (*RESOURCE_KEYS, "person_patterns"):
        if data.get(key) is not None:
            p = Path(data[key])
            data[key] = str(p if p.is_absolute() else base / p)
    return PipelineConfig(**data)
