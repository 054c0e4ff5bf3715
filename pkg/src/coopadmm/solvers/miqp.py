"""
Big-M mixed-integer projection onto the axis-aligned pairwise keep-out set, solved by
best-first branch-and-bound.

For each pair (i, j) with difference D = p_i - p_j, the four rows are
D_x >= d, -D_x >= d, D_y >= d, -D_y >= d; at least one must hold. A node fixes one
enforced row for a subset of pairs; its relaxation keeps the enforced rows, relaxes the
other rows of fixed pairs by M and drops unfixed pairs.
"""

import heapq
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from coopadmm.core.constants import MIQP_HALFPLANES, MIQP_PRUNE_TOL
from coopadmm.core.exceptions import ConfigError, SolverError
from coopadmm.core.interfaces import DoubleMatrix
from coopadmm.solvers.lsq import project_polyhedron, projection_cost

logger = logging.getLogger(__name__)

Assignment = Tuple[Tuple[int, int], ...]


def big_m_for(c: DoubleMatrix, d_safe: float) -> float:
    """Instance-scaled big-M constant."""
    c = np.asarray(c, dtype=float)
    return d_safe + 2.0 * (float(np.max(np.abs(c))) if c.size else 0.0) + 10.0


@dataclass
class BigMProjection:
    """min |z - c|^2 over the union of half-planes per pair.

    Args:
        c: Stacked target positions
        pairs: (i, j) pairs
        d_safe: Keep-out half-width
        M: Big-M constant; instance-scaled when omitted
        n_p: Position dimension (2)
    """

    c: DoubleMatrix
    pairs: Sequence[Tuple[int, int]]
    d_safe: float
    M: Optional[float] = None
    n_p: int = 2
    _rows: DoubleMatrix = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float)
        if self.n_p != 2:
            raise ConfigError("Big-M projection is defined for planar positions only")
        if self.M is None:
            self.M = big_m_for(self.c, self.d_safe)
        minimum = self.d_safe + 2.0 * (float(np.max(np.abs(self.c))) if self.c.size else 0.0) + 1.0
        if self.M < minimum:
            raise ConfigError(f"Big-M constant {self.M} below the validity bound {minimum}")
        self._rows = np.array([self.halfplanes(p) for p in range(len(self.pairs))]) \
            if self.pairs else np.zeros((0, MIQP_HALFPLANES, self.c.size))

    def halfplanes(self, p: int) -> DoubleMatrix:
        """(4, len(c)) rows P_r of pair p."""
        i, j = self.pairs[p]
        rows = np.zeros((MIQP_HALFPLANES, self.c.size))
        for axis in range(2):
            rows[2 * axis, 2 * i + axis] = 1.0
            rows[2 * axis, 2 * j + axis] = -1.0
            rows[2 * axis + 1] = -rows[2 * axis]
        return rows

    def row_values(self, z: DoubleMatrix) -> DoubleMatrix:
        """(pairs, 4) values P_r z."""
        return self._rows @ z

    def violation(self, z: DoubleMatrix) -> DoubleMatrix:
        """Per-pair shortfall d - max_r P_r z (positive means violated)."""
        if not self.pairs:
            return np.zeros(0)
        return self.d_safe - self.row_values(z).max(axis=1)

    def constraints_for(self, enforced: Dict[int, Sequence[int]]) -> Tuple[DoubleMatrix, DoubleMatrix]:
        """Stack the rows of every fixed pair: enforced rows at d, the rest at d - M."""
        A_rows: List[DoubleMatrix] = []
        b_rows: List[float] = []
        for p, rows_on in enforced.items():
            for r in range(MIQP_HALFPLANES):
                A_rows.append(self._rows[p, r])
                b_rows.append(self.d_safe if r in rows_on else self.d_safe - self.M)
        if not A_rows:
            return np.zeros((0, self.c.size)), np.zeros(0)
        return np.array(A_rows), np.array(b_rows)

    def solve_relaxation(self, enforced: Dict[int, Sequence[int]]) -> Optional[DoubleMatrix]:
        A, b = self.constraints_for(enforced)
        return project_polyhedron(self.c, A, b)


@dataclass
class BnBNode:
    bound: float
    depth: int
    assignment: Assignment
    z: DoubleMatrix


@dataclass
class MiqpResult:
    z: DoubleMatrix
    objective: float
    nodes: int


def solve_miqp(p: BigMProjection) -> MiqpResult:
    """Exact optimum of the big-M projection by best-first branch-and-bound.

    Args:
        p: Projection instance

    Returns:
        MiqpResult with the minimiser, its objective and the number of relaxations solved

    Raises:
        SolverError: If no binary assignment admits a feasible relaxation
    """
    root_z = p.c.copy()
    nodes = 1
    if not p.pairs or np.all(p.violation(root_z) <= 0):
        return MiqpResult(z=root_z, objective=0.0, nodes=nodes)

    counter = itertools.count()
    heap: List[Tuple[float, int, BnBNode]] = []
    heapq.heappush(heap, (0.0, next(counter), BnBNode(bound=0.0, depth=0, assignment=(), z=root_z)))
    incumbent: Optional[DoubleMatrix] = None
    best = float('inf')

    while heap:
        bound, _, node = heapq.heappop(heap)
        if bound >= best - MIQP_PRUNE_TOL:
            continue
        shortfall = p.violation(node.z)
        fixed = {pair for pair, _ in node.assignment}
        for pair in fixed:
            shortfall[pair] = -np.inf
        branch = int(np.argmax(shortfall))
        if shortfall[branch] <= MIQP_PRUNE_TOL:
            best, incumbent = bound, node.z
            logger.debug(f"Incumbent {best:.10g} at depth {node.depth}")
            continue

        values = p.row_values(node.z)[branch]
        for r in np.argsort(values, kind='stable'):
            assignment = node.assignment + ((branch, int(r)),)
            z = p.solve_relaxation({pair: (row,) for pair, row in assignment})
            nodes += 1
            if z is None:
                continue
            child_bound = projection_cost(z, p.c)
            if child_bound >= best - MIQP_PRUNE_TOL:
                continue
            heapq.heappush(heap, (child_bound, next(counter),
                                  BnBNode(bound=child_bound, depth=node.depth + 1, assignment=assignment, z=z)))

    if incumbent is None:
        raise SolverError("Branch-and-bound found no feasible assignment",
                          details={'pairs': list(p.pairs), 'nodes': nodes})
    logger.debug(f"Branch-and-bound finished: objective {best:.10g}, {nodes} relaxations")
    return MiqpResult(z=incumbent, objective=projection_cost(incumbent, p.c), nodes=nodes)


def enumerate_assignments(p: BigMProjection) -> MiqpResult:
    """Brute force over every pattern e_ij in {0,1}^4 with at least one zero per pair."""
    patterns = [tuple(r for r in range(MIQP_HALFPLANES) if not (mask >> r) & 1)
                for mask in range(2 ** MIQP_HALFPLANES - 1)]
    best_z, best = None, float('inf')
    count = 0
    for combo in itertools.product(patterns, repeat=len(p.pairs)):
        z = p.solve_relaxation(dict(enumerate(combo)))
        count += 1
        if z is None:
            continue
        cost = projection_cost(z, p.c)
        if cost < best:
            best, best_z = cost, z
    if best_z is None:
        raise SolverError("No binary pattern is feasible")
    return MiqpResult(z=best_z, objective=best, nodes=count)
