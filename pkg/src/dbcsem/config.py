"""JSON experiment configs: {"system": {...}, "train": {...}} with field
names mirroring SystemConfig/TrainConfig. Unknown fields are errors."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from dbcsem.models import SystemConfig
from dbcsem.training import TrainConfig


class ConfigError(ValueError):
    pass


def _strict_fields(cls, section: dict, name: str) -> None:
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) in '{name}' section: {sorted(unknown)}")


def load_config(path: str | Path) -> tuple[SystemConfig, TrainConfig]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = set(doc) - {"system", "train"}
    if unknown:
        raise ConfigError(f"{path}: unknown top-level section(s): {sorted(unknown)}")
    system = doc.get("system", {})
    train = doc.get("train", {})
    _strict_fields(SystemConfig, system, "system")
    _strict_fields(TrainConfig, train, "train")
    try:
        return SystemConfig.from_dict(system), TrainConfig.from_dict(train)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dump_config(cfg: SystemConfig, tc: TrainConfig) -> dict:
    return {"system": cfg.to_dict(), "train": tc.to_dict()}
