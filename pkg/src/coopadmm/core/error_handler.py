"""
Error handling at the application boundary and around fan-out work.
"""

import logging
import traceback
from contextlib import contextmanager
from functools import wraps
from typing import Any, Callable, Iterator, Type

from coopadmm.core.exceptions import CoopAdmmError

logger = logging.getLogger(__name__)

# details keys that locate a failure inside an ADMM run, in display order
LOCATION_KEYS = ('backend', 'agent', 'tau', 'iteration')


def handle_errors(default_return=None, log_errors=True):
    """
    Decorator returning ``default_return`` instead of raising.

    Args:
        default_return: Value to return when an error occurs
        log_errors: Log the formatted error, and the traceback at DEBUG
    """
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            try:
                return func(*args, **kwargs)
            except Exception as e:
                if log_errors:
                    logger.error(f"{func.__name__} failed: {format_error(e)}")
                    logger.debug(f"Traceback: {traceback.format_exc()}")
                return default_return
        return wrapper
    return decorator


@contextmanager
def failure_context(error_type: Type[CoopAdmmError], message: str, **location) -> Iterator[None]:
    """Re-raise package errors from the block as ``error_type``, merging ``location`` into details.

    Errors already of ``error_type`` keep their class and only gain the missing location keys.
    """
    try:
        yield
    except error_type as e:
        for key, value in location.items():
            e.details.setdefault(key, value)
        raise
    except CoopAdmmError as e:
        raise error_type(f"{message}: {e.message}", details={**e.details, **location, 'cause': e.error_code}) from e


def format_error(error: Exception) -> str:
    """
    Format an error for display on the command line.

    Package errors render as ``[CODE] message`` followed by the agent, timestep and
    iteration they carry, if any.
    """
    if not isinstance(error, CoopAdmmError):
        return f"Unexpected error: {error}"
    where = [f"{key}={error.details[key]}" for key in LOCATION_KEYS if key in error.details]
    return f"{error} ({', '.join(where)})" if where else str(error)


def get_error_details(error: Exception) -> dict:
    """Type, message, traceback and, for package errors, code and details."""
    details = {
        'type': type(error).__name__,
        'message': str(error),
        'traceback': traceback.format_exc(),
    }
    if isinstance(error, CoopAdmmError):
        details['error_code'] = error.error_code
        details['details'] = error.details
    return details
