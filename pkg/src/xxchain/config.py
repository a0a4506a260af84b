"""Flat key = value configuration files.

One assignment per line, '#' starts a comment, values are parsed as int,
float, or comma-separated lists thereof; anything else stays a string.
"""

from __future__ import annotations

__all__ = ["ConfigError", "parse_value", "parse_config_text", "load_config", "echo_config"]


class ConfigError(ValueError):
    """Malformed config line or unknown key."""


def parse_value(text: str):
    text = text.strip()
    if "," in text:
        return [parse_value(part) for part in text.split(",") if part.strip()]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = parse_value(value)
    return out


def load_config(path) -> dict:
    with open(path, "r", encoding="utf8") as fh:
        return parse_config_text(fh.read())


def echo_config(config: dict) -> list[str]:
    """Deterministic one-per-line echo, suitable for output headers."""
    lines = []
    for key in sorted(config):
        value = config[key]
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return lines
