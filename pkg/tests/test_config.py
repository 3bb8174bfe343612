import pytest

from dd_metrology.config import EngineConfig, LogConfig
from dd_metrology.config.app import RESOURCES
from dd_metrology.utils import InvalidConfiguration


def test_default_config_sections():
    config = EngineConfig.get_or_create_instance()
    assert config.appName == "dd-metrology"
    assert config.dim_cap == 4096
    assert config.threads == 4
    assert config.decoupling["direction_starts"] == 32
    assert config.acceptance["ghz_constant_rel"] == pytest.approx(1e-2)


def test_instance_is_shared():
    assert EngineConfig.get_or_create_instance() is EngineConfig.get_or_create_instance()


def test_dim_cap_environment_override(monkeypatch):
    monkeypatch.setenv("DDM_DIM_CAP", "64")
    assert EngineConfig.get_or_create_instance().dim_cap == 64


def test_dim_cap_override_must_be_integer(monkeypatch):
    monkeypatch.setenv("DDM_DIM_CAP", "lots")
    with pytest.raises(InvalidConfiguration):
        EngineConfig.get_or_create_instance()


def test_config_path_must_exist(monkeypatch, tmp_path):
    monkeypatch.setenv("CONFIG_PATH", str(tmp_path / "missing.yaml"))
    with pytest.raises(FileNotFoundError):
        EngineConfig.get_or_create_instance()


def test_schema_violation_is_reported(monkeypatch, tmp_path):
    text = (RESOURCES / "config" / "default.yaml").read_text()
    broken = tmp_path / "broken.yaml"
    broken.write_text(text.replace("threads: 4", "threads: 0"))
    monkeypatch.setenv("CONFIG_PATH", str(broken))
    with pytest.raises(InvalidConfiguration) as error:
        EngineConfig.get_or_create_instance()
    assert "[DDM:001]" in error.value.message


def test_log_level_from_environment(monkeypatch):
    monkeypatch.setenv("LOG_LEVEL", "DEBUG")
    config = LogConfig().log_config
    assert config["loggers"]["dd_metrology"]["level"] == "DEBUG"
    assert config["handlers"]["console"]["stream"] == "ext://sys.stderr"
