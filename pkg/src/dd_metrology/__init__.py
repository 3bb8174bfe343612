import logging

from dotenv import load_dotenv

from .cli import main
from .config import EngineConfig

load_dotenv()
logger = logging.getLogger(__name__)

__version__ = "0.1.0"


__all__ = ["EngineConfig", "main"]
