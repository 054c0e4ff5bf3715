"""
Logging setup and ADMM progress sinks.
"""

import logging
import threading
from collections import deque
from typing import List, Union

from coopadmm.core.constants import PROGRESS_BUFFER_SIZE
from coopadmm.core.interfaces import ProgressSink

LOG_FORMAT = '%(asctime)s %(levelname)s: %(message)s'
LOG_DATEFMT = '%Y-%m-%d %H:%M:%S'


def setup_logging(level: Union[int, str] = logging.INFO) -> None:
    """Install the root log format unless a handler is already configured."""
    root_logger = logging.getLogger()
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO
    if not root_logger.handlers:
        logging.basicConfig(level=level, format=LOG_FORMAT, datefmt=LOG_DATEFMT)
    else:
        root_logger.setLevel(level)


class ProgressRecorder(ProgressSink):
    """Buffered, thread-safe progress sink."""

    def __init__(self, max_buffer_size: int = PROGRESS_BUFFER_SIZE):
        self.buffer = deque(maxlen=max_buffer_size)
        self.buffer_lock = threading.Lock()
        self._closed = False

    def __call__(self, record: dict) -> None:
        if self._closed:
            return
        with self.buffer_lock:
            self.buffer.append(dict(record))

    def records(self) -> List[dict]:
        """Snapshot of the buffered records, oldest first."""
        with self.buffer_lock:
            return list(self.buffer)

    def close(self) -> None:
        """Drop buffered records and ignore further input."""
        self._closed = True
        with self.buffer_lock:
            self.buffer.clear()


class LoggingProgressSink(ProgressSink):
    """Forwards progress records to a logger at INFO."""

    def __init__(self, logger: logging.Logger | None = None):
        self.logger = logger or logging.getLogger("coopadmm.progress")

    def __call__(self, record: dict) -> None:
        self.logger.info(
            "iter %d residual %.6g dual %.6g y-step %.1f ms z-step %.1f ms",
            record["iteration"], record["residual"], record.get("dual_residual", float("nan")),
            record["y_step_ms"], record["z_step_ms"],
        )
