from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import yaml

from .paths import ROOT_DIR, resolve_path


DEFAULT_CONFIG_FILES = (
    ROOT_DIR / "config.yaml",
    ROOT_DIR / "config.example.yaml",
)

ENV_PREFIX = "VFD_"


@dataclass(frozen=True)
class AppConfig:
    root_dir: Path
    config_path: Path | None
    raw: dict[str, Any]

    @property
    def logs_dir(self) -> Path:
        return self.path("app.logs_dir", "logs")

    @property
    def results_dir(self) -> Path:
        return self.path("app.results_dir", "results")

    def get(self, dotted_key: str, default: Any = None) -> Any:
        current: Any = self.raw
        for part in dotted_key.split("."):
            if not isinstance(current, dict) or part not in current:
                return default
            current = current[part]
        return current

    def path(self, dotted_key: str, default: str | Path | None = None) -> Path:
        value = self.get(dotted_key, default)
        if value is None:
            raise ConfigError(f"Missing config path: {dotted_key}")
        return resolve_path(value, self.root_dir)

    def section(self, name: str, flat_keys: Iterable[str] = ()) -> dict[str, Any]:
        """Return the `name` mapping; a flat document with known top-level keys also counts."""
        value = self.raw.get(name)
        if value is None:
            keys = set(flat_keys)
            return {key: item for key, item in self.raw.items() if key in keys}
        if not isinstance(value, dict):
            raise ConfigError(f"Config section must be a mapping: {name}")
        return dict(value)

    def env(self, name: str) -> Any:
        env_key = f"{ENV_PREFIX}{name.upper()}"
        value = os.environ.get(env_key)
        if value is None:
            return None
        try:
            return yaml.safe_load(value)
        except yaml.YAMLError as exc:
            raise ConfigError(f"Invalid value in {env_key}: {exc}") from exc


class ConfigError(RuntimeError):
    pass


def load_config(config_path: str | Path | None = None) -> AppConfig:
    path = _select_config_path(config_path)
    raw = _load_yaml(path) if path else {}
    return AppConfig(root_dir=ROOT_DIR, config_path=path, raw=raw)


def _select_config_path(config_path: str | Path | None) -> Path | None:
    if config_path:
        path = resolve_path(config_path, Path.cwd())
        if not path.exists():
            raise ConfigError(f"Config file does not exist: {path}")
        return path

    for path in DEFAULT_CONFIG_FILES:
        if path.exists():
            return path
    return None


def _load_yaml(path: Path) -> dict[str, Any]:
    try:
        with path.open("r", encoding="utf-8") as file:
            data = yaml.safe_load(file) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"Invalid YAML config {path}: {exc}") from exc

    if not isinstance(data, dict):
        raise ConfigError(f"Config root must be a mapping: {path}")
    return data


@dataclass(frozen=True)
class CommandContext:
    config: AppConfig
    command_name: str

    def output_path(self, value: str | None, default_name: str) -> Path:
        if value:
            return resolve_path(value, Path.cwd())
        return self.config.results_dir / default_name

    def layered(self, section: str, flat_keys: Iterable[str], args_values: dict[str, Any]) -> dict[str, Any]:
        """Merge file < VFD_* environment < command-line values for the given keys."""
        keys = list(flat_keys)
        merged = self.config.section(section, keys)
        for key in keys:
            env_value = self.config.env(key)
            if env_value is not None:
                merged[key] = env_value
        for key, value in args_values.items():
            if value is not None:
                merged[key] = value
        return merged
