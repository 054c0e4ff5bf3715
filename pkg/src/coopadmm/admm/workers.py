"""
Ordered worker pool for the per-agent and per-timestep fan-out.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from coopadmm.core.constants import THREADS_ENV_VAR
from coopadmm.core.exceptions import ConfigError
from coopadmm.utils.helpers import available_workers

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(requested: Optional[int] = None) -> int:
    """Worker count: explicit request, else the environment override, else available parallelism.

    Raises:
        ConfigError: If the environment override is not a nonnegative integer
    """
    if requested is None or requested == 0:
        env = os.environ.get(THREADS_ENV_VAR)
        if env not in (None, ""):
            try:
                requested = int(env)
            except ValueError:
                raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}")
            if requested < 0:
                raise ConfigError(f"{THREADS_ENV_VAR} must be nonnegative, got {requested}")
    if not requested:
        return available_workers()
    return max(1, int(requested))


class WorkerPool:
    """Thread pool whose results always come back in submission order."""

    def __init__(self, max_workers: Optional[int] = None):
        self.max_workers = resolve_threads(max_workers)
        self._executor: Optional[ThreadPoolExecutor] = None

    def __enter__(self) -> "WorkerPool":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    def _get_executor(self) -> ThreadPoolExecutor:
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=self.max_workers, thread_name_prefix="coopadmm")
        return self._executor

    def map_ordered(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        """Apply fn to every item; the first failure in index order is re-raised."""
        items = list(items)
        if self.max_workers == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        executor = self._get_executor()
        futures = [executor.submit(fn, item) for item in items]
        return [f.result() for f in futures]

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None
