"""
Helper functions for coopadmm.
"""

import os
from pathlib import Path

import numpy as np

from coopadmm.core.constants import FLOAT_FORMAT
from coopadmm.core.exceptions import CoopAdmmError


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix of an (N, d) point array.

    Args:
        points: Row-stacked points

    Returns:
        Symmetric (N, N) matrix with zero diagonal
    """
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.einsum('ijk,ijk->ij', diff, diff))


def format_float(value: float) -> str:
    """Lossless decimal rendering of a float."""
    return format(float(value), FLOAT_FORMAT)


def prepare_output_dir(path: str | os.PathLike) -> Path:
    """Create an output directory if needed and check it is writable.

    Args:
        path: Directory path

    Returns:
        Resolved directory path

    Raises:
        CoopAdmmError: If the directory cannot be created or written
    """
    out = Path(path).resolve()
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CoopAdmmError(f"Cannot create output directory {out}: {e}", error_code="IO001",
                            details={'path': str(out)})
    if not os.access(out, os.W_OK):
        raise CoopAdmmError(f"Output directory is not writable: {out}", error_code="IO001",
                            details={'path': str(out)})
    return out


def available_workers() -> int:
    """Number of usable CPUs for this process."""
    if hasattr(os, 'sched_getaffinity'):
        return max(1, len(os.sched_getaffinity(0)))
    return max(1, os.cpu_count() or 1)
