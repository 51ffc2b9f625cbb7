"""
INI configuration loading with layered precedence: model defaults, then
the config file, then command-line overrides.
"""

import configparser
import hashlib
import io
import logging
import os
from typing import Any, Dict, Mapping, Optional

from pydantic import ValidationError

from ..errors import ConfigError
from .schema import RunConfig

logger = logging.getLogger(__name__)

SECTIONS = ("scenario", "selector", "monitor", "split", "grid", "degradation")
RUN_SECTION = "run"

# Config-file key -> field name where the two differ
SELECTOR_KEYS = {
    "W": "window_w",
    "A_min": "a_min",
    "T_dwell": "t_dwell",
}
SELECTOR_KEYS_REVERSE = {field: key for key, field in SELECTOR_KEYS.items()}


def _read_ini(path: str) -> Dict[str, Dict[str, str]]:
    if not os.path.exists(path):
        raise ConfigError(f"Config file not found: {path}")
    parser = configparser.ConfigParser()
    # Keys are case sensitive (W, A_min, T_dwell)
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"Cannot parse config file {path}: {e}")

    known = set(SECTIONS) | {RUN_SECTION}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"Unknown section [{section}] in {path}")
    return {section: dict(parser.items(section)) for section in parser.sections()}


def _merge(raw: Dict[str, Dict[str, Any]], overrides: Optional[Mapping[str, Any]]):
    """
    Apply overrides given as "section.key" (or bare run-level "key") names.
    None values mean "not given" and are skipped.
    """
    for name, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, key = name.rpartition(".")
        section = section or RUN_SECTION
        raw.setdefault(section, {})[key] = value


def _to_model_input(raw: Dict[str, Dict[str, Any]]) -> Dict[str, Any]:
    data: Dict[str, Any] = dict(raw.get(RUN_SECTION, {}))
    for section in SECTIONS:
        values = dict(raw.get(section, {}))
        if section == "selector":
            values = {SELECTOR_KEYS.get(key, key): value for key, value in values.items()}
        data[section] = values
    return data


def load_run_config(path: Optional[str] = None,
                    overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Build a RunConfig from defaults, an optional INI file and overrides.

    Args:
        path: INI file with [scenario], [selector], ... sections
        overrides: Mapping of "section.key" to value; None values are ignored

    Returns:
        RunConfig: The validated configuration

    Raises:
        ConfigError: unreadable file, unknown section or invalid value
    """
    raw: Dict[str, Dict[str, Any]] = _read_ini(path) if path else {}
    _merge(raw, overrides)
    try:
        config = RunConfig.model_validate(_to_model_input(raw))
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"Invalid configuration value for '{location}': {first['msg']}")
    logger.debug(f"Loaded configuration (file={path}, overrides={sorted(k for k, v in (overrides or {}).items() if v is not None)})")
    return config


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ", ".join(_format(item) for item in value)
    if hasattr(value, "value"):
        return str(value.value)
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def dumps_run_config(config: RunConfig) -> str:
    """Canonical INI text of a resolved configuration"""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    for section in SECTIONS:
        model = getattr(config, section)
        items = {}
        for field, value in model:
            if value is None:
                continue
            key = SELECTOR_KEYS_REVERSE.get(field, field) if section == "selector" else field
            items[key] = _format(value)
        parser[section] = items
    parser[RUN_SECTION] = {
        field: _format(value)
        for field, value in config
        if field not in SECTIONS
    }
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def dump_run_config(config: RunConfig, path: str) -> str:
    """Write the resolved configuration next to an output"""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps_run_config(config))
    return path


def config_fingerprint(config: RunConfig) -> str:
    """sha256 of the canonical dump"""
    return hashlib.sha256(dumps_run_config(config).encode("utf-8")).hexdigest()
