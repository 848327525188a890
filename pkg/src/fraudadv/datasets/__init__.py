"""Bundled German Credit data (UCI Statlog, space-separated) and its schema."""

from importlib import resources
from pathlib import Path


def german_data_path() -> Path:
    return Path(str(resources.files(__name__) / "german.data"))


def german_schema_path() -> Path:
    return Path(str(resources.files(__name__) / "german.ini"))


def ablation_config_path() -> Path:
    return Path(str(resources.files(__name__) / "ablation.json"))
