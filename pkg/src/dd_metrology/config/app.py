import logging
import os

from pathlib import Path

import yamale

from ..utils import Constants, InvalidConfiguration

logger = logging.getLogger(__name__)

RESOURCES = Path(__file__).resolve().parent.parent / "resources"


class EngineConfig:

    _instance = None
    config: list
    appName: str
    numerics: dict
    decoupling: dict
    metrology: dict
    output: dict
    runtime: dict
    acceptance: dict

    @classmethod
    def get_or_create_instance(cls):
        """
        Provides a mechanism to retrieve an existing instance of the `EngineConfig`
        class or create a new one if none exists. Every numerical module reads its
        tolerances through this single instance so a run uses one consistent set.

        :returns: The single instance of the `EngineConfig` class.
        :rtype: EngineConfig
        """
        if cls._instance is None:
            logger.debug("Creating new instance of EngineConfig")
            cls._instance = EngineConfig()
        return cls._instance

    @classmethod
    def reset_instance(cls):
        """Drops the cached instance so the next access re-reads the environment."""
        cls._instance = None

    def __init__(self):
        self.path = self._resolve_path("CONFIG_PATH", Constants.DEFAULT_CONFIG)
        schema_path = self._resolve_path("CONFIG_SCHEMA_PATH", Constants.CONFIG_SCHEMA)
        logger.debug(f"Reading config {self.path} against schema {schema_path}")
        try:
            schema = yamale.make_schema(str(schema_path))
            self.config = yamale.make_data(str(self.path))
            yamale.validate(schema, self.config)
        except ValueError as e:
            logger.error(f"Schema Validation failed!\n{str(e)}")
            raise InvalidConfiguration(str(e)) from e
        logger.debug("Schema validation success!")
        self._set_default_config_class_attributes(self.config[0][0].get("engine"))
        self._apply_environment_overrides()

    @staticmethod
    def _resolve_path(env_var: str, default: str) -> Path:
        """
        Resolves a configuration file path. When ``env_var`` is set its value must
        name an existing file; otherwise the packaged resource ``default`` is used.

        :raises FileNotFoundError: Raised if the path named by ``env_var`` does not exist.
        :return: The configuration file path.
        :rtype: Path
        """
        configured = os.environ.get(env_var)
        if configured is None:
            return RESOURCES / default
        if not os.path.exists(configured):
            raise FileNotFoundError(f"{configured} is not a file")
        return Path(configured)

    def _set_default_config_class_attributes(self, defaults: dict):
        """
        Sets configuration sections as attributes of the instance.

        :param defaults: Mapping of section name to section values.
        :type defaults: dict
        """
        for key, value in defaults.items():
            setattr(self, key, value)

    def _apply_environment_overrides(self):
        cap = os.environ.get("DDM_DIM_CAP")
        if cap is None:
            return
        try:
            self.numerics["dim_cap"] = int(cap)
        except ValueError as e:
            raise InvalidConfiguration(f"DDM_DIM_CAP={cap!r} is not an integer") from e
        logger.info(f"Dimension cap overridden from DDM_DIM_CAP: {cap}")

    @property
    def dim_cap(self) -> int:
        return int(self.numerics["dim_cap"])

    @property
    def threads(self) -> int:
        return int(self.runtime["threads"])
