"""Run configuration: defaults, key=value config file, CLI overrides.

Precedence: built-in defaults, then the file named by the NETTISA_CONFIG
environment variable (if set), then explicit command-line flags.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

ENV_CONFIG = "NETTISA_CONFIG"

MODES = ("classic", "nettisa", "splt", "oracle")
FORMATS = ("csv", "binary", "jsonl")
VARIANCE_MODES = ("standard", "paper-literal")


class ConfigError(Exception):
    """Invalid configuration value or file."""


@dataclass
class RunConfig:
    mode: str = "nettisa"
    active_timeout_s: float = 300.0
    inactive_timeout_s: float = 65.0
    max_entries: int = 1 << 20
    forced_flush_interval_s: float = 0.0
    output_format: str = "csv"
    enhanced: bool = False
    variance: str = "standard"
    threads: int = 1

    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.output_format not in FORMATS:
            raise ConfigError(f"unknown format {self.output_format!r}")
        if self.variance not in VARIANCE_MODES:
            raise ConfigError(f"unknown variance mode {self.variance!r}")
        if self.active_timeout_s <= 0 or self.inactive_timeout_s <= 0:
            raise ConfigError("timeouts must be positive")
        if self.forced_flush_interval_s < 0:
            raise ConfigError("forced flush interval must be >= 0")
        if self.max_entries < 1:
            raise ConfigError("max_entries must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.mode == "splt" and self.output_format == "binary":
            raise ConfigError("splt mode has no binary record layout; use csv or jsonl")
        return self


_BOOL_TRUE = ("1", "true", "yes", "on")
_BOOL_FALSE = ("0", "false", "no", "off")

_FILE_KEYS = {
    "mode": str,
    "active_timeout_s": float,
    "inactive_timeout_s": float,
    "max_entries": int,
    "forced_flush_interval_s": float,
    "format": str,
    "enhanced": bool,
    "variance": str,
    "threads": int,
}

_KEY_TO_FIELD = {"format": "output_format"}


def load_config_file(path: str) -> dict:
    """Parse a key=value config file; # starts a comment."""
    values: dict = {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FILE_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        kind = _FILE_KEYS[key]
        try:
            if kind is bool:
                lowered = value.lower()
                if lowered in _BOOL_TRUE:
                    parsed = True
                elif lowered in _BOOL_FALSE:
                    parsed = False
                else:
                    raise ValueError(value)
            else:
                parsed = kind(value)
        except ValueError:
            raise ConfigError(
                f"{path}:{lineno}: bad value {value!r} for {key}") from None
        values[_KEY_TO_FIELD.get(key, key)] = parsed
    return values


def build_config(**overrides) -> RunConfig:
    """Layer defaults, the NETTISA_CONFIG file, and explicit overrides.

    Overrides passed as None mean "not set here" and defer to the file or
    the default.
    """
    cfg = RunConfig()
    env_path = os.environ.get(ENV_CONFIG)
    if env_path:
        for field, value in load_config_file(env_path).items():
            setattr(cfg, field, value)
    for field, value in overrides.items():
        if value is not None:
            setattr(cfg, field, value)
    return cfg.validate()
