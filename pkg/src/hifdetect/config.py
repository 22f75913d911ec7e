"""Flat key = value run configuration files.

One assignment per line; blank lines and lines starting with '#' are
ignored.  Keys are single tokens, values keep their internal spacing.
A full copy of the parsed configuration is echoed into every report so
runs can be replayed from their own artifacts.
"""

from __future__ import annotations

import os

from .errors import ConfigError

_REQUIRED = object()


def read_config(path) -> dict:
    """Parses a configuration file into an ordered key -> value dict."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: blank key or value")
            if key in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value
    return out


def _fetch(cfg: dict, key: str, default):
    if key in cfg:
        return cfg[key]
    if default is _REQUIRED:
        raise ConfigError(f"missing required config key {key!r}")
    return default


def get_str(cfg: dict, key: str, default=_REQUIRED) -> str:
    return _fetch(cfg, key, default)


def get_choice(cfg: dict, key: str, choices, default=_REQUIRED) -> str:
    value = _fetch(cfg, key, default)
    if value not in choices:
        raise ConfigError(f"config key {key!r} must be one of {sorted(choices)}, got {value!r}")
    return value


def get_int(cfg: dict, key: str, default=_REQUIRED) -> int:
    value = _fetch(cfg, key, default)
    if isinstance(value, int):
        return value
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"config key {key!r} must be an integer, got {value!r}") from None


def get_float(cfg: dict, key: str, default=_REQUIRED) -> float:
    value = _fetch(cfg, key, default)
    if isinstance(value, float):
        return value
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"config key {key!r} must be a number, got {value!r}") from None


def get_bool(cfg: dict, key: str, default=_REQUIRED) -> bool:
    value = _fetch(cfg, key, default)
    if isinstance(value, bool):
        return value
    lowered = value.lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    raise ConfigError(f"config key {key!r} must be true or false, got {value!r}")


def get_floats(cfg: dict, key: str, default=_REQUIRED) -> tuple:
    value = _fetch(cfg, key, default)
    if isinstance(value, tuple):
        return value
    try:
        return tuple(float(part) for part in value.split(","))
    except ValueError:
        raise ConfigError(
            f"config key {key!r} must be comma-separated numbers, got {value!r}"
        ) from None
