"""Run settings from config.yaml, the environment and a .env file."""

import copy
import logging
import os
import sys
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv

from twistorkit.bundles import DEGREE_BOUND_POLICIES
from twistorkit.errors import BackendError, ConfigError
from twistorkit.scalars import get_backend

DEFAULT_CONFIG_PATH = Path("config.yaml")
LOG_FORMAT = "%(name)s:%(levelname)s:%(message)s"

DEFAULTS: dict[str, Any] = {
    "backend": "exact",
    "seed": 7,
    "samples": 100,
    "workers": 1,
    "progress": False,
    "log_level": "WARNING",
    "tolerances": {
        "float_residual": 1e-10,
        "quaternionic": 1e-12,
        "constancy": 1e-12,
        "metric_imag": 1e-10,
        "fd_step": 1e-5,
        "fd_tolerance": 1e-6,
    },
    "cohomology": {
        "degree_bound_policy": "sharp",
        "validate_degree_bound": True,
        "scan_window": None,
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: str | Path | None = None) -> dict[str, Any]:
    """Read the YAML config and apply environment overrides.

    Args:
        path (str | Path | None): Config file. Defaults to ``TWISTORKIT_CONFIG``
            or ``config.yaml`` in the working directory; a missing file means
            the built-in defaults.

    Returns:
        dict: The merged settings.

    Raises:
        ConfigError: If the file is not a YAML mapping, or names an unknown
            backend or degree bound policy.
    """
    load_dotenv()
    path = Path(path or os.environ.get("TWISTORKIT_CONFIG") or DEFAULT_CONFIG_PATH)
    loaded: dict = {}
    if path.exists():
        try:
            with open(path, "r") as f:
                loaded = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {path}: {e}") from e
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path} must contain a mapping")
    config = _merge(DEFAULTS, loaded)

    env_backend = os.environ.get("TWISTORKIT_BACKEND")
    if env_backend:
        config["backend"] = env_backend
    try:
        get_backend(config["backend"])
    except BackendError as e:
        raise ConfigError(str(e)) from e
    policy = config["cohomology"].get("degree_bound_policy")
    if policy not in DEGREE_BOUND_POLICIES:
        raise ConfigError(f"unknown degree bound policy {policy!r}")
    return config


def configure_logging(level: str | int = "WARNING") -> None:
    """Send library logs to stderr; stdout is reserved for JSON."""
    if isinstance(level, str):
        level = level.upper()
    logging.basicConfig(stream=sys.stderr, format=LOG_FORMAT, level=level, force=True)
