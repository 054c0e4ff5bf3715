"""
Base class for stateful coopadmm components: a namespaced logger and wall-clock timing.
"""

import logging
import time
from abc import ABC
from contextlib import contextmanager
from typing import Iterator


class Stopwatch:
    """Elapsed wall-clock time of a ``timed`` block, in milliseconds once the block exits."""

    def __init__(self):
        self.start = time.perf_counter()
        self.elapsed_ms = 0.0

    def stop(self) -> float:
        self.elapsed_ms = 1e3 * (time.perf_counter() - self.start)
        return self.elapsed_ms


class BaseService(ABC):
    """Owns ``coopadmm.<ClassName>`` logger; messages take lazy %-style arguments."""

    def __init__(self):
        self.logger = logging.getLogger(f"coopadmm.{self.__class__.__name__}")

    def log_info(self, message: str, *args) -> None:
        self.logger.info(message, *args)

    def log_warning(self, message: str, *args) -> None:
        self.logger.warning(message, *args)

    def log_error(self, message: str, *args) -> None:
        self.logger.error(message, *args)

    def log_debug(self, message: str, *args) -> None:
        self.logger.debug(message, *args)

    @contextmanager
    def timed(self, label: str) -> Iterator[Stopwatch]:
        """Time a block; the duration is logged at DEBUG under ``label``."""
        watch = Stopwatch()
        try:
            yield watch
        finally:
            watch.stop()
            self.logger.debug("%s took %.1f ms", label, watch.elapsed_ms)
