"""
Tolerance settings
Reads config.yaml once per process and applies SEQMET_* environment overrides
"""

import os
from functools import lru_cache
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping, Optional

import yaml
from dotenv import load_dotenv

ENV_PREFIX = "SEQMET_"
DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config.yaml"


def _coerce(raw: str, default: Any) -> Any:
    """Parse an override string as the type of the configured default"""
    if isinstance(default, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(float(raw))
    if isinstance(default, float):
        return float(raw)
    return raw


def read_config(path: Optional[str] = None) -> Mapping[str, Mapping[str, Any]]:
    """
    Load settings from YAML and overlay environment overrides

    Args:
        path: YAML file; defaults to $SEQMET_CONFIG or the repository config.yaml

    Returns:
        Read-only mapping section -> (read-only mapping key -> value)
    """
    load_dotenv()
    path = path or os.getenv(f"{ENV_PREFIX}CONFIG") or DEFAULT_CONFIG_PATH
    with open(path, "r") as file:
        config = yaml.safe_load(file) or {}

    sections = {}
    for section, values in config.items():
        merged = {}
        for key, default in (values or {}).items():
            override = os.getenv(f"{ENV_PREFIX}{section}_{key}".upper())
            merged[key] = _coerce(override, default) if override is not None else default
        sections[section] = MappingProxyType(merged)
    return MappingProxyType(sections)


@lru_cache(maxsize=1)
def settings() -> Mapping[str, Mapping[str, Any]]:
    return read_config()


def reload_settings() -> Mapping[str, Mapping[str, Any]]:
    settings.cache_clear()
    return settings()


def tol(section: str, key: str, override: Optional[float] = None) -> Any:
    """Configured value for section.key unless an explicit override is given"""
    if override is not None:
        return override
    return settings()[section][key]
