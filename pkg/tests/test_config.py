"""Strict JSON experiment configs."""

import json

import pytest

from dbcsem.config import ConfigError, dump_config, load_config
from dbcsem.models import SystemConfig
from dbcsem.training import TrainConfig


def _write(tmp_path, doc):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


def test_round_trip(tmp_path):
    cfg = SystemConfig(height=4, width=4, k=6, l=12)
    tc = TrainConfig(epochs_phase1=3, lam=3.0, seed=9)
    path = _write(tmp_path, dump_config(cfg, tc))
    cfg2, tc2 = load_config(path)
    assert cfg2 == cfg
    assert tc2 == tc


def test_empty_sections_use_defaults(tmp_path):
    cfg, tc = load_config(_write(tmp_path, {}))
    assert cfg == SystemConfig()
    assert tc == TrainConfig()


def test_unknown_field_rejected(tmp_path):
    with pytest.raises(ConfigError, match="momentum"):
        load_config(_write(tmp_path, {"train": {"momentum": 0.9}}))


def test_unknown_section_rejected(tmp_path):
    with pytest.raises(ConfigError, match="optimizer"):
        load_config(_write(tmp_path, {"optimizer": {}}))


def test_invalid_json_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


def test_invalid_values_surface_as_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, {"system": {"k": 5, "l": 11}}))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, {"train": {"lam": -2.0}}))
