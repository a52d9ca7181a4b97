import dataclasses
import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional

import yaml

from constants.config import (
    API_KEY_ENV_VAR,
    DEFAULT_API_BASE,
    DEFAULT_BASE_MODEL,
    DEFAULT_BUCKET_BOUNDS,
    DEFAULT_CONCURRENCY,
    DEFAULT_PAY_RATE,
    DEFAULT_POLL_INTERVAL,
    DEFAULT_POLL_TIMEOUT,
    DEFAULT_PROFILE_MARGIN,
    DEFAULT_SEED,
    DEFAULT_SPLIT_RATIO,
)


class ConfigError(Exception):
    """Invalid configuration file or option value."""


@dataclass(frozen=True)
class CliConfig:
    """Effective settings of one command. The API key is deliberately not a field."""

    project: str = "."
    api_base: str = DEFAULT_API_BASE
    model: str = DEFAULT_BASE_MODEL
    dialect: str = "completion"
    ratio: float = DEFAULT_SPLIT_RATIO
    seed: int = DEFAULT_SEED
    buckets: List[int] = field(default_factory=lambda: list(DEFAULT_BUCKET_BOUNDS))
    pay_rate: float = DEFAULT_PAY_RATE
    concurrency: int = DEFAULT_CONCURRENCY
    poll_interval: float = DEFAULT_POLL_INTERVAL
    poll_timeout: float = DEFAULT_POLL_TIMEOUT
    margin: int = DEFAULT_PROFILE_MARGIN
    backend: str = "remote"
    format: str = "text"
    mock_scenario: Optional[str] = None

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise ConfigError(f"ratio must be within (0, 1), got {self.ratio}")
        if not 0 <= self.pay_rate <= 1:
            raise ConfigError(f"pay_rate must be within [0, 1], got {self.pay_rate}")
        if self.concurrency < 1:
            raise ConfigError(f"concurrency must be at least 1, got {self.concurrency}")
        if self.poll_interval <= 0 or self.poll_timeout <= 0:
            raise ConfigError("poll_interval and poll_timeout must be positive")
        if self.backend not in ("remote", "baseline"):
            raise ConfigError(f"backend must be remote or baseline, got '{self.backend}'")
        if self.dialect not in ("completion", "chat"):
            raise ConfigError(f"dialect must be completion or chat, got '{self.dialect}'")
        if self.format not in ("text", "json", "csv"):
            raise ConfigError(f"format must be text, json or csv, got '{self.format}'")

    def to_dict(self):
        return dataclasses.asdict(self)


CONFIG_FIELDS = tuple(f.name for f in dataclasses.fields(CliConfig))


def load_config_file(path):
    """Read a YAML mapping of CliConfig fields.

    Raises:
        ConfigError: unreadable file, not a mapping, or unknown keys.
    """
    try:
        with open(path, encoding="utf-8") as config_file:
            data = yaml.safe_load(config_file) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"unable to read config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    unknown = sorted(set(data) - set(CONFIG_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: {', '.join(map(str, unknown))}")
    return data


def build_config(overrides, config_path=None):
    """Constants, then the YAML file, then explicit flags.

    Args:
        overrides: dict of flag values; None means the flag was not given.
    """
    values = load_config_file(config_path) if config_path else {}
    values.update({k: v for k, v in overrides.items() if k in CONFIG_FIELDS and v is not None})
    try:
        return CliConfig(**values)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def load_api_key(key_file=None):
    """API key from a file or the environment. Never logged or stored."""
    if key_file:
        try:
            with open(key_file, encoding="utf-8") as f:
                return f.read().strip()
        except OSError as e:
            raise ConfigError(f"unable to read API key file: {e.strerror}") from e
    key = os.environ.get(API_KEY_ENV_VAR)
    if not key:
        logging.warning(f"{API_KEY_ENV_VAR} is not set")
    return key
