import os

import yamale

from .app import RESOURCES
from ..utils import Constants


class LogConfig:
    log_config: dict

    def __init__(self):
        self.log_config = self._load_log_config()

    @staticmethod
    def _load_log_config() -> dict:
        path = os.environ.get("LOG_CONFIG", str(RESOURCES / Constants.LOG_CONFIG))
        log_config = yamale.make_data(path)[0][0]
        log_config["loggers"]["dd_metrology"]["level"] = os.environ.get(
            "LOG_LEVEL", "INFO"
        )
        return log_config
