"""Service and CLI configuration: defaults, config file, env overrides.

Precedence (lowest to highest): built-in defaults, JSON config file,
``PROMPTVOX_*`` environment variables, explicit keyword overrides.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import UnreadableFile

ENV_PREFIX = "PROMPTVOX_"

_ENV_KEYS = {
    "host": "HOST",
    "port": "PORT",
    "default_resolution": "RESOLUTION",
    "backend": "BACKEND",
    "backend_url": "BACKEND_URL",
    "color_tolerance": "COLOR_TOLERANCE",
    "seed_radius": "SEED_RADIUS",
    "persist_dir": "PERSIST_DIR",
    "request_deadline": "DEADLINE",
}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    default_resolution: int = 256
    backend: str = "reference"  # "reference" or "remote"
    backend_url: str | None = None
    color_tolerance: float = 0.1
    seed_radius: int = 2
    persist_dir: str | None = None
    request_deadline: float = 30.0


def load_config(
    path: str | Path | None = None,
    env: dict[str, str] | None = None,
    **overrides,
) -> ServiceConfig:
    values: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise UnreadableFile(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UnreadableFile(f"config {path} is not valid JSON: {exc}") from exc
        unknown = set(raw) - {f.name for f in fields(ServiceConfig)}
        if unknown:
            raise UnreadableFile(f"config {path} has unknown keys: {sorted(unknown)}")
        values.update(raw)

    env = os.environ if env is None else env
    for name, suffix in _ENV_KEYS.items():
        raw_value = env.get(ENV_PREFIX + suffix)
        if raw_value is None:
            continue
        values[name] = raw_value

    values.update({k: v for k, v in overrides.items() if v is not None})

    config = ServiceConfig()
    for f in fields(ServiceConfig):
        if f.name not in values:
            continue
        value = values[f.name]
        if value is not None and f.name in ("port", "default_resolution", "seed_radius"):
            value = int(value)
        elif value is not None and f.name in ("color_tolerance", "request_deadline"):
            value = float(value)
        setattr(config, f.name, value)
    return config
