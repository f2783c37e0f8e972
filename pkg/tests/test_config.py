import logging
import os
from unittest.mock import patch

import pytest

from twistorkit.config import DEFAULTS, LOG_FORMAT, configure_logging, load_config
from twistorkit.errors import ConfigError


def test_missing_file_gives_defaults(tmp_path):
    """Tests that a missing config file gives the defaults."""
    config = load_config(tmp_path / "absent.yaml")
    assert config == DEFAULTS


def test_yaml_overrides_are_merged(tmp_path):
    """Tests that YAML values merge into nested defaults."""
    path = tmp_path / "config.yaml"
    path.write_text("seed: 11\ntolerances:\n  fd_step: 1.0e-4\n")
    config = load_config(path)
    assert config["seed"] == 11
    assert config["tolerances"]["fd_step"] == 1e-4
    assert config["tolerances"]["fd_tolerance"] == DEFAULTS["tolerances"]["fd_tolerance"]
    assert DEFAULTS["seed"] == 7


def test_config_path_from_environment(tmp_path):
    """Tests TWISTORKIT_CONFIG as the config path."""
    path = tmp_path / "alt.yaml"
    path.write_text("samples: 5\n")
    with patch.dict(os.environ, {"TWISTORKIT_CONFIG": str(path)}):
        assert load_config()["samples"] == 5


@patch.dict(os.environ, {"TWISTORKIT_BACKEND": "float"})
def test_backend_from_environment(tmp_path):
    """Tests TWISTORKIT_BACKEND overriding the backend."""
    assert load_config(tmp_path / "absent.yaml")["backend"] == "float"


@patch.dict(os.environ, {"TWISTORKIT_BACKEND": "quad"})
def test_unknown_backend_is_a_config_error(tmp_path):
    """Tests that an unknown backend name is a config error."""
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.yaml")


def test_unknown_degree_bound_policy(tmp_path):
    """Tests that an unknown degree bound policy is a config error."""
    path = tmp_path / "config.yaml"
    path.write_text("cohomology:\n  degree_bound_policy: loose\n")
    with pytest.raises(ConfigError):
        load_config(path)


@pytest.mark.parametrize("text", ["backend: [", "- just\n- a list\n"])
def test_malformed_yaml(tmp_path, text):
    """Tests that unparsable YAML or a non-mapping is a config error."""
    path = tmp_path / "config.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(path)


def test_dotenv_is_loaded(tmp_path):
    """Tests that load_config reads .env."""
    with patch("twistorkit.config.load_dotenv") as mock_dotenv:
        load_config(tmp_path / "absent.yaml")
    mock_dotenv.assert_called_once()


def test_configure_logging_uses_stderr():
    """Tests the log level and format set by configure_logging."""
    configure_logging("debug")
    root = logging.getLogger()
    assert root.level == logging.DEBUG
    assert any(getattr(h.formatter, "_fmt", None) == LOG_FORMAT for h in root.handlers)
    configure_logging("WARNING")
