"""YAML run configuration with ``${VAR}`` interpolation.

Example::

    toolchain:
      compiler_path: gcc
    generator:
      fixtures_dir: demo/fixtures      # omit for a live endpoint
    refiner:
      endpoint_url: http://localhost:8000/v1/chat/completions
      model_name: refiner-1.3b
      api_key_env_var: REFINER_KEY
    run:
      workers: 8
      opt_levels: [O0, O1, O2, O3]
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .backend import Backend, BackendConfig, FixtureBackend, HttpBackend, RecordingBackend
from .corpus import ToolchainConfig
from .ddpf import PipelineSettings
from .errors import ConfigError
from .harness import RunConfig
from .metric import BleuConfig
from .prompts import PromptTemplates
from .sce import DEFAULT_MAX_RATIONALE_TOKENS, GRANULARITIES

_VAR = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


def interpolate(value):
    """Replace ``${NAME}`` in every string with the environment value."""
    if isinstance(value, str):
        def sub(m: re.Match) -> str:
            name = m.group(1)
            if name not in os.environ:
                raise ConfigError(f"environment variable {name} is not set")
            return os.environ[name]
        return _VAR.sub(sub, value)
    if isinstance(value, dict):
        return {k: interpolate(v) for k, v in value.items()}
    if isinstance(value, list):
        return [interpolate(v) for v in value]
    return value


@dataclass
class BackendSpec:
    """Where a role's completions come from: fixtures on disk or an HTTP endpoint."""

    config: BackendConfig = field(default_factory=BackendConfig)
    fixtures_dir: str | None = None
    record_dir: str | None = None

    def build(self) -> Backend:
        if self.fixtures_dir:
            return FixtureBackend(self.fixtures_dir)
        if not self.config.endpoint_url:
            raise ConfigError("backend needs either fixtures_dir or endpoint_url")
        backend: Backend = HttpBackend(self.config)
        if self.record_dir:
            backend = RecordingBackend(backend, self.record_dir)
        return backend


@dataclass
class AppConfig:
    toolchain: ToolchainConfig = field(default_factory=ToolchainConfig)
    generator: BackendSpec = field(default_factory=BackendSpec)
    refiner: BackendSpec = field(default_factory=BackendSpec)
    bleu: BleuConfig = field(default_factory=BleuConfig)
    run: RunConfig = field(default_factory=RunConfig)
    prompt_templates: PromptTemplates = field(default_factory=PromptTemplates)
    granularity: str = "concise"
    max_rationale_tokens: int = DEFAULT_MAX_RATIONALE_TOKENS
    raw: dict = field(default_factory=dict, repr=False)

    def settings(self) -> PipelineSettings:
        return PipelineSettings(self.granularity, self.max_rationale_tokens, self.prompt_templates, self.bleu)

    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    @classmethod
    def from_dict(cls, data: dict | None) -> "AppConfig":
        data = interpolate(data or {})
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        known = {"toolchain", "generator", "refiner", "bleu", "run", "prompt_templates",
                 "granularity", "max_rationale_tokens"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        try:
            cfg = cls(
                toolchain=_build(ToolchainConfig, data.get("toolchain")),
                generator=_backend(data.get("generator")),
                refiner=_backend(data.get("refiner")),
                bleu=_build(BleuConfig, data.get("bleu")),
                run=_build(RunConfig, data.get("run")),
                prompt_templates=_build(PromptTemplates, data.get("prompt_templates")),
                granularity=data.get("granularity", "concise"),
                max_rationale_tokens=int(data.get("max_rationale_tokens", DEFAULT_MAX_RATIONALE_TOKENS)),
                raw=data,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if cfg.granularity not in GRANULARITIES:
            raise ConfigError(f"granularity must be one of {GRANULARITIES}")
        if cfg.max_rationale_tokens <= 0:
            raise ConfigError("max_rationale_tokens must be positive")
        return cfg


def _build(cls, section):
    section = section or {}
    if not isinstance(section, dict):
        raise ConfigError(f"{cls.__name__} section must be a mapping")
    names = {f.name for f in dataclasses.fields(cls) if not f.name.startswith("_")}
    unknown = set(section) - names
    if unknown:
        raise ConfigError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    return cls(**section)


def _backend(section) -> BackendSpec:
    section = dict(section or {})
    fixtures = section.pop("fixtures_dir", None)
    record = section.pop("record_dir", None)
    return BackendSpec(_build(BackendConfig, section), fixtures, record)


def load_config(path: str | Path | None) -> AppConfig:
    if path is None:
        return AppConfig.from_dict({})
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return AppConfig.from_dict(data)
