"""
Least-distance routines shared by the projection back-ends.

``least_distance`` is the Lawson-Hanson reduction of min |x|^2 s.t. G x >= h
to a nonnegative least-squares problem.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize, nnls

from coopadmm.core.interfaces import DoubleMatrix

logger = logging.getLogger(__name__)

Pairs = Sequence[Tuple[int, int]]

_LDP_INFEASIBLE_TOL = 1e-12


def least_distance(G: DoubleMatrix, h: DoubleMatrix) -> Optional[DoubleMatrix]:
    """Minimum-norm point of {x : G x >= h}.

    Args:
        G: (r, n) constraint matrix
        h: (r,) right-hand side

    Returns:
        The minimiser, or None when the polyhedron is empty
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float).ravel()
    n = G.shape[1]
    if h.size == 0 or np.all(h <= 0):
        return np.zeros(n)
    E = np.vstack([G.T, h[None, :]])
    f = np.zeros(n + 1)
    f[n] = 1.0
    u, _ = nnls(E, f)
    r = E @ u - f
    if np.linalg.norm(r) <= _LDP_INFEASIBLE_TOL or abs(r[n]) <= _LDP_INFEASIBLE_TOL:
        return None
    return -r[:n] / r[n]


def project_polyhedron(c: DoubleMatrix, A: DoubleMatrix, b: DoubleMatrix) -> Optional[DoubleMatrix]:
    """Euclidean projection of c onto {z : A z >= b}; None when empty."""
    c = np.asarray(c, dtype=float)
    if len(b) == 0:
        return c.copy()
    A = np.atleast_2d(np.asarray(A, dtype=float))
    x = least_distance(A, np.asarray(b, dtype=float) - A @ c)
    return None if x is None else c + x


def projection_cost(z: DoubleMatrix, c: DoubleMatrix) -> float:
    """Squared distance |z - c|^2."""
    diff = np.asarray(z, dtype=float) - np.asarray(c, dtype=float)
    return float(diff @ diff)


def min_separation(z_p: DoubleMatrix, pairs: Pairs, n_p: int = 2) -> float:
    """Smallest pair distance; +inf with no pairs."""
    if not pairs:
        return float('inf')
    pts = np.asarray(z_p, dtype=float).reshape(-1, n_p)
    idx = np.asarray(pairs, dtype=int)
    return float(np.min(np.linalg.norm(pts[idx[:, 0]] - pts[idx[:, 1]], axis=1)))


def is_separated(z_p: DoubleMatrix, pairs: Pairs, d_safe: float, tol: float = 0.0, n_p: int = 2) -> bool:
    """True when every pair is at least d_safe - tol apart."""
    return min_separation(z_p, pairs, n_p) >= d_safe - tol


def repair_separation(z_p: DoubleMatrix, pairs: Pairs, d_safe: float, n_p: int = 2,
                      max_sweeps: int = 1000, margin: float = 1e-9) -> Optional[DoubleMatrix]:
    """Cyclically push violated pairs apart, symmetrically along their difference.

    Args:
        z_p: Stacked positions
        pairs: (i, j) pairs
        d_safe: Required distance
        n_p: Position dimension
        max_sweeps: Sweep limit
        margin: Extra separation added to every push

    Returns:
        Repaired stacked positions, or None if sweeps run out
    """
    pts = np.asarray(z_p, dtype=float).reshape(-1, n_p).copy()
    target = d_safe + margin
    for _ in range(max_sweeps):
        moved = False
        for k, (i, j) in enumerate(pairs):
            diff = pts[i] - pts[j]
            dist = float(np.linalg.norm(diff))
            if dist >= d_safe:
                continue
            if dist < 1e-12:
                angle = np.pi * k / max(1, len(pairs))
                direction = np.zeros(n_p)
                direction[0] = np.cos(angle)
                if n_p > 1:
                    direction[1] = np.sin(angle)
            else:
                direction = diff / dist
            push = 0.5 * (target - dist) * direction
            pts[i] += push
            pts[j] -= push
            moved = True
        if not moved:
            return pts.ravel()
    return None


def polish_separation(z0: DoubleMatrix, c: DoubleMatrix, pairs: Pairs, d_safe: float,
                      n_p: int = 2) -> DoubleMatrix:
    """Local refinement of a feasible point by SLSQP; falls back to z0 unless the result is feasible and cheaper.

    Args:
        z0: Feasible starting point
        c: Projection target
        pairs: (i, j) pairs
        d_safe: Required distance
        n_p: Position dimension

    Returns:
        The better of z0 and the refined point
    """
    if not pairs:
        return np.asarray(c, dtype=float).copy()
    idx = np.asarray(pairs, dtype=int)
    count = len(z0) // n_p
    sel = np.zeros((len(pairs), count))
    sel[np.arange(len(pairs)), idx[:, 0]] = 1.0
    sel[np.arange(len(pairs)), idx[:, 1]] = -1.0

    def constraint(z):
        diff = sel @ z.reshape(count, n_p)
        return np.sum(diff * diff, axis=1) - d_safe * d_safe

    def constraint_jac(z):
        diff = sel @ z.reshape(count, n_p)
        jac = 2.0 * sel[:, :, None] * diff[:, None, :]
        return jac.reshape(len(pairs), -1)

    result = minimize(
        lambda z: projection_cost(z, c), np.asarray(z0, dtype=float),
        jac=lambda z: 2.0 * (z - c), method='SLSQP',
        constraints=[{'type': 'ineq', 'fun': constraint, 'jac': constraint_jac}],
        options={'ftol': 1e-12, 'maxiter': 200},
    )
    candidate = repair_separation(result.x, pairs, d_safe, n_p) if np.all(np.isfinite(result.x)) else None
    if candidate is not None and projection_cost(candidate, c) < projection_cost(z0, c):
        return candidate
    return np.asarray(z0, dtype=float)
