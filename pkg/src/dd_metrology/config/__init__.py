from .app import EngineConfig
from .app_metadata import DecouplingMetrologyMetadata
from .log_config import LogConfig


__all__ = ["EngineConfig", "DecouplingMetrologyMetadata", "LogConfig"]
