"""
Constraint graph over vehicles built from pairwise distances.
"""

import logging
import math
from dataclasses import dataclass
from typing import FrozenSet, Iterator, List, Sequence, Tuple

import numpy as np

from coopadmm.core.constants import DEFAULT_D_CMU
from coopadmm.core.exceptions import ConfigError
from coopadmm.core.interfaces import DoubleMatrix
from coopadmm.utils.helpers import pairwise_distances

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstraintGraph:
    """Undirected graph with edge set and symmetric adjacency matrix."""

    N: int
    edges: FrozenSet[Tuple[int, int]]
    adjacency: np.ndarray

    def neighbors(self, i: int) -> List[int]:
        """Sorted neighbors of node i.

        Raises:
            IndexError: If i is not a node of the graph
        """
        return neighbors(self, i)

    def pairs(self) -> Iterator[Tuple[int, int]]:
        """Each edge once as (i, j) with i < j, in lexicographic order."""
        for i in range(self.N):
            for j in self.neighbors(i):
                if j > i:
                    yield (i, j)


def build_graph(positions: Sequence[Sequence[float]] | DoubleMatrix, d_safe: float,
                d_cmu: float = DEFAULT_D_CMU) -> ConstraintGraph:
    """Edge (i, j) iff d_safe <= |p_i - p_j| <= d_cmu.

    Args:
        positions: (N, n_p) vehicle positions
        d_safe: Minimum safe distance
        d_cmu: Maximum communication distance

    Returns:
        ConstraintGraph

    Raises:
        ConfigError: If d_safe > d_cmu or positions are not finite
    """
    if d_cmu is None or (isinstance(d_cmu, float) and math.isnan(d_cmu)):
        d_cmu = DEFAULT_D_CMU
    if d_safe > d_cmu:
        raise ConfigError(f"d_safe={d_safe} exceeds d_cmu={d_cmu}", details={'d_safe': d_safe, 'd_cmu': d_cmu})
    pts = np.atleast_2d(np.asarray(positions, dtype=float))
    if pts.size and not np.all(np.isfinite(pts)):
        raise ConfigError("Vehicle positions must be finite")
    count = pts.shape[0] if pts.size else 0

    dist = pairwise_distances(pts) if count else np.zeros((0, 0))
    adjacency = (dist >= d_safe) & (dist <= d_cmu)
    np.fill_diagonal(adjacency, False)

    close = np.argwhere(np.triu(dist < d_safe, k=1))
    for i, j in close:
        logger.warning(f"Vehicles {i} and {j} start {dist[i, j]:.3f} m apart, closer than d_safe={d_safe}")

    edges = frozenset((int(i), int(j)) for i, j in np.argwhere(np.triu(adjacency, k=1)))
    return ConstraintGraph(N=count, edges=edges, adjacency=adjacency)


def neighbors(g: ConstraintGraph, i: int) -> List[int]:
    """Sorted list of j with (i, j) an edge.

    Raises:
        IndexError: If i is outside 0..N-1
    """
    if not 0 <= i < g.N:
        raise IndexError(f"Node {i} out of range for graph with {g.N} nodes")
    return [int(j) for j in np.flatnonzero(g.adjacency[i])]
