"""
Dense primal-dual interior-point solver for small SDPs, and the semidefinite lift of the
pairwise-separation projection.

Problem form: min <C, X> s.t. <A_l, X> >= b_l, <E_l, X> = c_l, X PSD. Inequalities get
nonnegative slacks, so the cone is S^d_+ x R^p_+. Directions are HKM with Mehrotra
predictor-corrector.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, eigh, solve_triangular

from coopadmm.core.constants import (
    DEFAULT_SDP_MAX_ITER, DEFAULT_SDP_TOL, EXTRACTION_SAMPLES, FEASIBILITY_TOL, POLISH_CANDIDATES, RANK_ONE_TOL,
    SDP_DIVERGENCE_NORM, SDP_INFEASIBLE_FACTOR, SDP_STEP_FRACTION,
)
from coopadmm.core.exceptions import ConfigError, ExtractionFailed
from coopadmm.core.interfaces import DoubleMatrix
from coopadmm.solvers.lsq import polish_separation, projection_cost, repair_separation, min_separation

logger = logging.getLogger(__name__)


class SdpStatus(Enum):
    OPTIMAL = "optimal"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"


@dataclass
class SdpProblem:
    """Symmetric data of one SDP.

    Args:
        C: (d, d) objective
        inequalities: list of (A_l, b_l) meaning <A_l, X> >= b_l
        equalities: list of (E_l, c_l) meaning <E_l, X> = c_l
    """

    C: DoubleMatrix
    inequalities: List[Tuple[DoubleMatrix, float]] = field(default_factory=list)
    equalities: List[Tuple[DoubleMatrix, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        d = self.C.shape[0]
        if d < 1 or self.C.shape != (d, d):
            raise ConfigError(f"Objective must be square, got shape {self.C.shape}")
        for A, _ in list(self.inequalities) + list(self.equalities):
            A = np.atleast_2d(np.asarray(A, dtype=float))
            if A.shape != (d, d) or not np.allclose(A, A.T):
                raise ConfigError("Constraint matrices must be symmetric and match the objective size")
        if not np.allclose(self.C, self.C.T):
            raise ConfigError("Objective matrix must be symmetric")

    @property
    def dim(self) -> int:
        return self.C.shape[0]


@dataclass
class SdpSolution:
    X: DoubleMatrix
    objective: float
    status: SdpStatus
    iterations: int
    gap: float
    y: DoubleMatrix = field(default_factory=lambda: np.zeros(0))
    dual_objective: float = float('nan')
    primal_infeasibility: float = float('nan')
    dual_infeasibility: float = float('nan')


def _sym(M: DoubleMatrix) -> DoubleMatrix:
    return 0.5 * (M + M.T)


def _max_step_psd(L: DoubleMatrix, dM: DoubleMatrix) -> float:
    """Largest alpha with L L^T + alpha dM PSD."""
    W = solve_triangular(L, solve_triangular(L, dM, lower=True).T, lower=True)
    lam = eigh(_sym(W), eigvals_only=True)[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _max_step_vec(v: DoubleMatrix, dv: DoubleMatrix) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def solve_sdp(p: SdpProblem, tol: float = DEFAULT_SDP_TOL, max_iterations: int = DEFAULT_SDP_MAX_ITER) -> SdpSolution:
    """Primal-dual path following with Mehrotra predictor-corrector.

    Args:
        p: Problem data
        tol: Bound on relative primal infeasibility, dual infeasibility and gap
        max_iterations: Iteration limit

    Returns:
        SdpSolution; non-optimal termination is reported in ``status``
    """
    d = p.dim
    if not p.inequalities and not p.equalities:
        raise ConfigError("SDP needs at least one constraint")
    ineq = [(np.asarray(A, dtype=float), float(b)) for A, b in p.inequalities]
    eq = [(np.asarray(E, dtype=float), float(c)) for E, c in p.equalities]
    n_ineq = len(ineq)
    Fs = np.array([A for A, _ in ineq] + [E for E, _ in eq]).reshape(-1, d, d)
    h = np.array([b for _, b in ineq] + [c for _, c in eq], dtype=float)
    L_rows = len(h)
    # slack columns: inequality row l carries -s_l
    G = np.zeros((L_rows, n_ineq))
    G[np.arange(n_ineq), np.arange(n_ineq)] = -1.0
    C = p.C
    Fflat = Fs.reshape(L_rows, -1)

    eta = 10.0 * max(1.0, np.linalg.norm(C, 'fro'), float(np.max(np.abs(h))) if L_rows else 0.0)
    X = eta * np.eye(d)
    S = eta * np.eye(d)
    s = np.full(n_ineq, eta)
    w = np.full(n_ineq, eta)
    y = np.zeros(L_rows)
    nu = d + n_ineq

    norm_h = np.linalg.norm(h)
    norm_C = np.linalg.norm(C, 'fro')
    status = SdpStatus.MAX_ITERATIONS
    pinf = dinf = gap = np.inf
    iteration = 0

    for iteration in range(1, max_iterations + 1):
        AX = Fflat @ X.ravel()
        r_p = h - AX - G @ s
        Aty = np.tensordot(y, Fs, axes=1) if L_rows else np.zeros((d, d))
        R_d = C - Aty - S
        r_w = -G.T @ y - w

        pobj = float(np.sum(C * X))
        dobj = float(h @ y)
        pinf = np.linalg.norm(r_p) / (1.0 + norm_h)
        dinf = (np.linalg.norm(R_d, 'fro') + np.linalg.norm(r_w)) / (1.0 + norm_C)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        logger.debug(f"SDP iter {iteration}: pobj {pobj:.10g} dobj {dobj:.10g} "
                     f"pinf {pinf:.2e} dinf {dinf:.2e} gap {gap:.2e}")
        if pinf <= tol and dinf <= tol and gap <= tol:
            status = SdpStatus.OPTIMAL
            break
        if np.linalg.norm(y) > SDP_DIVERGENCE_NORM or np.linalg.norm(X, 'fro') > SDP_DIVERGENCE_NORM:
            status = SdpStatus.INFEASIBLE
            break

        mu = (float(np.sum(X * S)) + float(s @ w)) / nu
        try:
            L_S = cholesky(S, lower=True)
            L_X = cholesky(X, lower=True)
        except LinAlgError:
            logger.warning(f"SDP iterate lost definiteness at iteration {iteration}")
            break
        S_inv = cho_solve((L_S, True), np.eye(d))
        S_inv = _sym(S_inv)
        D = s / w if n_ineq else np.zeros(0)

        # Schur complement M_lj = tr(F_l X F_j S^-1) + g_l^T D g_j
        W = X @ Fs @ S_inv
        M = Fflat @ W.transpose(0, 2, 1).reshape(L_rows, -1).T
        M = _sym(M) + (G * D) @ G.T
        try:
            factor = cho_factor(M)
            solve_M = lambda rhs: cho_solve(factor, rhs)
        except LinAlgError:
            solve_M = lambda rhs: np.linalg.lstsq(M, rhs, rcond=None)[0]

        XRdSinv = X @ R_d @ S_inv

        def direction(R_c: DoubleMatrix, R_s: DoubleMatrix):
            rhs = r_p - Fflat @ R_c.ravel() + Fflat @ XRdSinv.ravel() - G @ R_s + G @ (D * r_w)
            dy = solve_M(rhs)
            dS = R_d - np.tensordot(dy, Fs, axes=1)
            dX = R_c - _sym(X @ dS @ S_inv)
            dw = r_w - G.T @ dy
            ds = R_s - D * dw
            return dX, dS, dy, ds, dw

        # predictor
        dX_a, dS_a, dy_a, ds_a, dw_a = direction(-X, -s)
        a_p = min(1.0, _max_step_psd(L_X, dX_a), _max_step_vec(s, ds_a))
        a_d = min(1.0, _max_step_psd(L_S, dS_a), _max_step_vec(w, dw_a))
        mu_aff = (float(np.sum((X + a_p * dX_a) * (S + a_d * dS_a)))
                  + float((s + a_p * ds_a) @ (w + a_d * dw_a))) / nu
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        # corrector
        R_c = _sym((sigma * mu * np.eye(d) - dX_a @ dS_a) @ S_inv) - X
        R_s = (sigma * mu - s * w - ds_a * dw_a) / w if n_ineq else np.zeros(0)
        dX, dS, dy, ds, dw = direction(R_c, R_s)

        a_p = min(1.0, SDP_STEP_FRACTION * min(_max_step_psd(L_X, dX), _max_step_vec(s, ds)))
        a_d = min(1.0, SDP_STEP_FRACTION * min(_max_step_psd(L_S, dS), _max_step_vec(w, dw)))
        X = _sym(X + a_p * dX)
        s = s + a_p * ds
        S = _sym(S + a_d * dS)
        y = y + a_d * dy
        w = w + a_d * dw
    else:
        if pinf > SDP_INFEASIBLE_FACTOR * tol:
            status = SdpStatus.INFEASIBLE

    if status is not SdpStatus.OPTIMAL:
        logger.warning(f"SDP stopped with status {status.value} after {iteration} iterations "
                       f"(pinf {pinf:.2e}, dinf {dinf:.2e}, gap {gap:.2e})")
    return SdpSolution(
        X=X, objective=float(np.sum(C * X)), status=status, iterations=iteration, gap=float(gap),
        y=y, dual_objective=float(h @ y), primal_infeasibility=float(pinf), dual_infeasibility=float(dinf),
    )


def difference_gram(N: int, i: int, j: int, n_p: int = 2) -> DoubleMatrix:
    """K_ij = M_ij^T M_ij where M_ij z = p_i - p_j."""
    M = np.zeros((n_p, N * n_p))
    M[:, i * n_p:(i + 1) * n_p] = np.eye(n_p)
    M[:, j * n_p:(j + 1) * n_p] = -np.eye(n_p)
    return M.T @ M


def lift_projection(c_p: DoubleMatrix, pairs: Sequence[Tuple[int, int]], d_safe: float,
                    n_p: int = 2) -> SdpProblem:
    """Semidefinite relaxation of min |z - c|^2 s.t. |p_i - p_j| >= d over X = [[Z, z], [z^T, 1]].

    The objective omits the constant |c|^2.
    """
    c = np.asarray(c_p, dtype=float)
    k = c.size
    N = k // n_p
    C = np.zeros((k + 1, k + 1))
    C[:k, :k] = np.eye(k)
    C[:k, k] = -c
    C[k, :k] = -c
    inequalities = []
    for i, j in pairs:
        A = np.zeros((k + 1, k + 1))
        A[:k, :k] = difference_gram(N, i, j, n_p)
        inequalities.append((A, d_safe * d_safe))
    corner = np.zeros((k + 1, k + 1))
    corner[k, k] = 1.0
    return SdpProblem(C=C, inequalities=inequalities, equalities=[(corner, 1.0)])


@dataclass
class Extraction:
    z: DoubleMatrix
    rank_one: bool
    objective: float
    samples: int


def extract_position(solution: SdpSolution, c_p: DoubleMatrix, pairs: Sequence[Tuple[int, int]],
                     d_safe: float, seed: Optional[Sequence[int]] = None, n_p: int = 2,
                     samples: int = EXTRACTION_SAMPLES, polish: bool = True) -> Extraction:
    """Recover a feasible position vector from a solved lift.

    Args:
        solution: Solved lifted SDP
        c_p: Projection target
        pairs: Constrained pairs
        d_safe: Required separation
        seed: Entropy for the Gaussian sampler
        n_p: Position dimension
        samples: Number of Gaussian draws when X is not rank one
        polish: Refine the cheapest few candidates with a local solve

    Returns:
        Extraction with a point satisfying every pair constraint

    Raises:
        ExtractionFailed: If no candidate can be repaired into a feasible point
    """
    c = np.asarray(c_p, dtype=float)
    X = solution.X
    k = X.shape[0] - 1
    corner = X[k, k] if X[k, k] > 0 else 1.0
    z = X[:k, k] / corner
    Z = X[:k, :k]
    cov = _sym(Z - np.outer(z, z))
    rank_one = np.linalg.norm(cov, 'fro') <= RANK_ONE_TOL * (1.0 + np.linalg.norm(Z, 'fro'))

    candidates = [z]
    drawn = 0
    if not rank_one:
        lam, V = eigh(cov)
        factor = V * np.sqrt(np.clip(lam, 0.0, None))
        rng = np.random.default_rng(np.random.SeedSequence(list(seed) if seed is not None else 0))
        draws = rng.standard_normal((samples, k))
        candidates.extend(z + draws @ factor.T)
        drawn = samples

    repaired = [r for r in (repair_separation(cand, pairs, d_safe, n_p) for cand in candidates) if r is not None]
    if not repaired:
        raise ExtractionFailed("No sample could be repaired into a separated configuration",
                               details={'samples': drawn, 'pairs': list(pairs)})
    repaired.sort(key=lambda r: projection_cost(r, c))
    if polish:
        repaired = [polish_separation(r, c, pairs, d_safe, n_p) for r in repaired[:POLISH_CANDIDATES]]
    best = min(repaired, key=lambda r: projection_cost(r, c))
    best_cost = projection_cost(best, c)
    if min_separation(best, pairs, n_p) < d_safe - FEASIBILITY_TOL:
        raise ExtractionFailed("Extracted point violates the separation constraints",
                               details={'min_distance': min_separation(best, pairs, n_p), 'd_safe': d_safe})
    return Extraction(z=best, rank_one=bool(rank_one), objective=best_cost, samples=drawn)
