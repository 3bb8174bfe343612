import numpy as np
import pytest

from dd_metrology.config import EngineConfig


@pytest.fixture(autouse=True)
def fresh_config(monkeypatch):
    for name in ("CONFIG_PATH", "CONFIG_SCHEMA_PATH", "DDM_DIM_CAP", "SOURCE_DATE_EPOCH"):
        monkeypatch.delenv(name, raising=False)
    EngineConfig.reset_instance()
    yield
    EngineConfig.reset_instance()


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(20240611))
