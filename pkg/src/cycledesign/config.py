"""Harness configuration: bundled defaults deep-merged with an optional user file."""

from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path
from typing import Any, Mapping


def _merge(base: dict, override: Mapping) -> dict:
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = copy.deepcopy(value)
    return base


def default_config() -> dict[str, Any]:
    text = resources.files("cycledesign.data").joinpath("default_config.json").read_text()
    return json.loads(text)


def load_config(path: str | Path | None = None, overrides: Mapping | None = None) -> dict[str, Any]:
    """Return the default config updated with ``path`` (JSON) and ``overrides``."""
    cfg = default_config()
    if path is not None:
        _merge(cfg, json.loads(Path(path).read_text()))
    if overrides:
        _merge(cfg, overrides)
    return cfg
