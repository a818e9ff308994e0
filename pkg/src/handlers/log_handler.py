"""
Log Handler
-----------
Sets up loguru sinks for okapair runs.
"""

import sys
from pathlib import Path
from typing import Optional

from loguru import logger

from src.utils.config import LoggingSettings

FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level} | {name}:{function}:{line} - {message}"
STDERR_FORMAT = (
    "<green>{time:HH:mm:ss}</green> | <level>{level}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)


class LogHandler:
    """Handles logging for okapair."""

    def __init__(self, config: LoggingSettings, level: Optional[str] = None):
        self.config = config
        self.log_level = (level or config.level).upper()
        self.log_file = config.file
        self._sinks = []
        self.setup()

    def setup(self) -> None:
        """Replace every sink: stderr at the run level, plus the rotating file when configured."""
        logger.remove()
        self._sinks = [logger.add(sys.stderr, level=self.log_level, format=STDERR_FORMAT)]
        if self.log_file:
            Path(self.log_file).parent.mkdir(parents=True, exist_ok=True)
            self._sinks.append(logger.add(
                self.log_file,
                rotation=self.config.rotation,
                retention=self.config.retention,
                level="DEBUG",
                format=FILE_FORMAT,
            ))
        logger.debug(f"logging at {self.log_level}" + (f", file {self.log_file}" if self.log_file else ""))

    def close(self) -> None:
        for sink in self._sinks:
            logger.remove(sink)
        self._sinks = []

    def get_log_file_path(self) -> Optional[str]:
        return self.log_file
