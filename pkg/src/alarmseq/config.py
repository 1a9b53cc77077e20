"""Flat ``key=value`` configuration files.

Blank lines and lines starting with ``#`` are ignored. Values are coerced to
the type of the matching dataclass field's default.
"""
from __future__ import annotations

import dataclasses
from pathlib import Path

from .errors import ConfigError


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def read_kv(path) -> dict[str, str]:
    try:
        return parse_kv(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _coerce(key, value: str, default):
    try:
        if isinstance(default, bool):
            if value.lower() in ("1", "true", "yes"):
                return True
            if value.lower() in ("0", "false", "no"):
                return False
            raise ValueError(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            return tuple(int(v) for v in value.replace(",", " ").split())
        return value
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def overrides_for(cls, mapping: dict[str, str], *, allowed=None) -> dict:
    """Typed keyword overrides for dataclass ``cls`` from string ``mapping``.

    Keys outside ``allowed`` (default: all fields with a default) raise ``ConfigError``.
    """
    fields = {f.name: f for f in dataclasses.fields(cls)}
    defaults = {}
    for name, f in fields.items():
        if f.default is not dataclasses.MISSING:
            defaults[name] = f.default
        elif f.default_factory is not dataclasses.MISSING:
            defaults[name] = f.default_factory()
    if allowed is None:
        allowed = set(defaults)
    out = {}
    for key, value in mapping.items():
        if key not in allowed or key not in defaults:
            raise ConfigError(f"unknown config key: {key}")
        out[key] = _coerce(key, value, defaults[key])
    return out


def dump_kv(obj, keys=None) -> str:
    lines = []
    for f in dataclasses.fields(obj):
        if keys is not None and f.name not in keys:
            continue
        value = getattr(obj, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name}={value}")
    return "\n".join(lines) + "\n"
