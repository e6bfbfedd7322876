"""Configuration loading: defaults, JSON file, flag overrides, environment."""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from pydantic import ValidationError

from ..models.config import ExperimentConfig
from .exceptions import ConfigError

logger = logging.getLogger(__name__)

ENV_PREFIX = "IASLAB_"


def _set_path(data: Dict[str, Any], path: str, value: Any) -> None:
    keys = path.split(".")
    node = data
    for key in keys[:-1]:
        child = node.get(key)
        if not isinstance(child, dict):
            child = {}
            node[key] = child
        node = child
    node[keys[-1]] = value


def _parse_env_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except ValueError:
        return raw


def env_overrides(environ: Mapping[str, str]) -> Dict[str, Any]:
    """Dotted-path overrides from ``IASLAB_`` variables.

    ``IASLAB_FGKA__POPULATION_SIZE=30`` becomes ``{"fgka.population_size": 30}``.
    Values are parsed as JSON and fall back to the raw string.
    """
    overrides = {}
    for name, raw in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX) or len(name) == len(ENV_PREFIX):
            continue
        path = ".".join(part.lower() for part in name[len(ENV_PREFIX):].split("__"))
        overrides[path] = _parse_env_value(raw)
    return overrides


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a JSON configuration document.

    Raises:
        ConfigError: If the file cannot be read, is not JSON or is not an object
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e.strerror or e}", context={"path": str(path)}) from e
    try:
        data = json.loads(text)
    except ValueError as e:
        raise ConfigError(f"config file is not valid JSON: {e}", context={"path": str(path)}) from e
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object", context={"path": str(path)})
    return data


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> ExperimentConfig:
    """Build and validate the experiment configuration.

    Args:
        path: Optional JSON config file
        overrides: Dotted-path values from command-line flags; ``None`` values are skipped
        environ: Environment to read ``IASLAB_`` variables from (``os.environ`` by default)

    Returns:
        The validated configuration

    Raises:
        ConfigError: For unreadable files, unknown keys or invalid values
    """
    data: Dict[str, Any] = read_config_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            _set_path(data, key, value)
    env = env_overrides(os.environ if environ is None else environ)
    for key, value in env.items():
        logger.debug("config override from environment: %s", key)
        _set_path(data, key, value)

    try:
        return ExperimentConfig.from_dict(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}", context={"errors": e.error_count()}) from e
