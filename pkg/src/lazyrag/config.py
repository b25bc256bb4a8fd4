"""Run configuration: one dataclass tree, loadable from YAML or JSON.

Every CLI subcommand takes ``--config PATH``; fields omitted from the file
keep their defaults, unknown fields are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .corpus import DEFAULT_VOCAB, Vocabulary
from .embedding import EmbeddingConfig
from .engine import EngineConfig
from .models import CostConfig
from .planner import PlannerConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorldConfig:
    """Synthetic corpus parameters."""

    seed: int = 7
    n_clips: int = 200
    clip_duration: float = 5.0
    keyframe_rate: float = 1.0
    label_rate: float = 0.25
    max_extra_objects: int = 2
    objects: tuple[str, ...] = DEFAULT_VOCAB.objects
    colors: tuple[str, ...] = DEFAULT_VOCAB.colors
    text_labels: tuple[str, ...] = DEFAULT_VOCAB.text_labels

    def vocabulary(self) -> Vocabulary:
        return Vocabulary(
            objects=tuple(self.objects),
            colors=tuple(self.colors),
            text_labels=tuple(self.text_labels),
        )


@dataclass(frozen=True)
class RunConfig:
    world: WorldConfig = field(default_factory=WorldConfig)
    costs: CostConfig = field(default_factory=CostConfig)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)


_SECTIONS = {
    "world": WorldConfig,
    "costs": CostConfig,
    "embedding": EmbeddingConfig,
    "planner": PlannerConfig,
    "engine": EngineConfig,
}


def _build(cls, data: Any, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        if cls is RunConfig:
            kwargs[name] = _build(_SECTIONS[name], value, f"{where}.{name}")
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_run_config(path: str | Path | None) -> RunConfig:
    """Load a RunConfig from a .yaml/.yml/.json file; None means defaults."""
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    if p.suffix in (".yaml", ".yml"):
        data = yaml.safe_load(text)
    elif p.suffix == ".json":
        data = json.loads(text)
    else:
        raise ConfigError(f"{p}: config must be .yaml, .yml, or .json")
    return _build(RunConfig, data, p.name)
