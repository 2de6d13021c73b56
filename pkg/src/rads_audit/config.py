"""Top-level configuration.

A single TOML file holds corpus paths and knobs; any CLI flag overrides
its config value. Credentials are never read from config, only from the
environment (see llm.API_KEY_ENV).
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import DataError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class ToolConfig:
    classifier: str = "builtin"
    llm: str = ""
    lexicon: str = ""
    descriptors: str = ""
    prompt_template: str = ""
    location_decimals: int = 4
    thresholds: tuple[float, ...] = (0.4, 0.8)
    lenient_ip: bool = False
    max_concurrent_fetches: int = 4
    llm_max_attempts: int = 3
    llm_backoff: float = 1.0
    llm_min_interval: float = 0.0
    llm_max_in_flight: int = 8


def load_config(path: str | Path | None = None) -> ToolConfig:
    if path is None:
        return ToolConfig()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise DataError(f"bad config {path}: {exc}") from exc

    known = {f.name: f for f in fields(ToolConfig)}
    kwargs = {}
    for key, value in data.items():
        name = key.replace("-", "_")
        if name not in known:
            raise DataError(f"unknown config key {key!r}")
        if name == "thresholds":
            value = tuple(float(v) for v in value)
        kwargs[name] = value
    return ToolConfig(**kwargs)
