"""
Runtime settings read from an INI file, with environment overrides.
"""

import configparser
import logging
import os
from dataclasses import dataclass
from pathlib import Path

from coopadmm.core.constants import DEFAULT_OUT_DIR, THREADS_ENV_VAR
from coopadmm.core.exceptions import ConfigError

logger = logging.getLogger(__name__)

SECTION = 'runtime'


@dataclass
class RuntimeSettings:
    """Process-level knobs: worker threads (0 = available parallelism), log level, output directory."""

    threads: int = 0
    log_level: str = "INFO"
    out_dir: str = DEFAULT_OUT_DIR

    @classmethod
    def load(cls, path: str | os.PathLike | None = None) -> "RuntimeSettings":
        """Read ``[runtime]`` from an INI file; missing file or keys fall back to defaults.

        Raises:
            ConfigError: If the file cannot be parsed or a value is invalid
        """
        settings = cls()
        if path is not None and Path(path).exists():
            parser = configparser.ConfigParser()
            try:
                parser.read(path, encoding='utf-8')
            except configparser.Error as e:
                raise ConfigError(f"Failed to parse settings file {path}: {e}")
            if parser.has_section(SECTION):
                try:
                    settings.threads = parser.getint(SECTION, 'threads', fallback=settings.threads)
                except ValueError as e:
                    raise ConfigError(f"Invalid threads value in {path}: {e}")
                settings.log_level = parser.get(SECTION, 'log_level', fallback=settings.log_level).upper()
                settings.out_dir = parser.get(SECTION, 'out_dir', fallback=settings.out_dir)
            else:
                logger.warning(f"Settings file {path} has no [{SECTION}] section")
        settings.apply_env()
        settings.validate()
        return settings

    def apply_env(self) -> None:
        env = os.environ.get(THREADS_ENV_VAR)
        if env not in (None, ""):
            try:
                self.threads = int(env)
            except ValueError:
                raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}")

    def validate(self) -> None:
        if self.threads < 0:
            raise ConfigError(f"threads must be nonnegative, got {self.threads}")
        if self.log_level not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            raise ConfigError(f"Unknown log level {self.log_level!r}")
