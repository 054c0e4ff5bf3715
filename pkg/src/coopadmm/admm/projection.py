"""
Second ADMM block: input clamp and nonconvex position projection per timestep.
"""

import logging
from abc import abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from coopadmm.core.constants import EXTRACTION_SAMPLES, FEASIBILITY_TOL, ORACLE_STARTS
from coopadmm.core.error_handler import failure_context
from coopadmm.core.exceptions import BackendFailure, ConfigError
from coopadmm.core.interfaces import DoubleMatrix, PositionProjector
from coopadmm.solvers.lsq import (
    is_separated, min_separation, polish_separation, projection_cost, repair_separation,
)
from coopadmm.solvers.miqp import BigMProjection, solve_miqp
from coopadmm.solvers.sdp import SdpStatus, extract_position, lift_projection, solve_sdp

logger = logging.getLogger(__name__)

Pairs = Sequence[Tuple[int, int]]


@dataclass(frozen=True)
class ProjectionTarget:
    """Targets of one timestep: c_u (N*m) and c_p (N*n_p) with the active pairs and input box."""

    tau: int
    c_u: DoubleMatrix
    c_p: DoubleMatrix
    pairs: Tuple[Tuple[int, int], ...]
    d_safe: float
    u_lower: DoubleMatrix
    u_upper: DoubleMatrix
    n_p: int = 2


def clamp_inputs(c_u: DoubleMatrix, lower: DoubleMatrix, upper: DoubleMatrix) -> DoubleMatrix:
    """Element-wise projection onto [lower, upper]."""
    return np.clip(np.asarray(c_u, dtype=float), lower, upper)


class CentredProjector(PositionProjector):
    """Shared template: feasible passthrough, centring on the centroid, final feasibility check."""

    name = "base"

    def __init__(self, n_p: int = 2):
        self.n_p = n_p

    def project(self, c_p: DoubleMatrix, pairs: Pairs, d_safe: float,
                seed: Optional[Sequence[int]] = None) -> DoubleMatrix:
        c = np.asarray(c_p, dtype=float)
        pairs = [tuple(p) for p in pairs]
        if not pairs or self.admits(c, pairs, d_safe):
            return c.copy()
        pts = c.reshape(-1, self.n_p)
        centroid = pts.mean(axis=0)
        centred = (pts - centroid).ravel()
        with failure_context(BackendFailure, f"{self.name} projection failed", backend=self.name):
            z = self._solve(centred, pairs, d_safe, seed)
        z = (np.asarray(z).reshape(-1, self.n_p) + centroid).ravel()
        if not is_separated(z, pairs, d_safe, FEASIBILITY_TOL, self.n_p):
            raise BackendFailure(f"{self.name} projection returned an infeasible point",
                                 details={'backend': self.name, 'min_distance': min_separation(z, pairs, self.n_p)})
        return z

    def admits(self, c: DoubleMatrix, pairs: Pairs, d_safe: float) -> bool:
        """Whether c already lies in this back-end's feasible set."""
        return is_separated(c, pairs, d_safe, n_p=self.n_p)

    @abstractmethod
    def _solve(self, c: DoubleMatrix, pairs: Pairs, d_safe: float, seed: Optional[Sequence[int]]) -> DoubleMatrix:
        pass


class SdrProjector(CentredProjector):
    """Semidefinite relaxation followed by randomised extraction."""

    name = "sdr"

    def __init__(self, n_p: int = 2, samples: int = EXTRACTION_SAMPLES, polish: bool = True, tol: float = 1e-7):
        super().__init__(n_p)
        self.samples = samples
        self.polish = polish
        self.tol = tol

    def _solve(self, c, pairs, d_safe, seed):
        sol = solve_sdp(lift_projection(c, pairs, d_safe, self.n_p), tol=self.tol)
        if sol.status is SdpStatus.INFEASIBLE:
            raise BackendFailure("lifted SDP reported infeasible", details={'iterations': sol.iterations})
        return extract_position(sol, c, pairs, d_safe, seed, self.n_p, self.samples, self.polish).z


class MiqpProjector(CentredProjector):
    """Big-M branch-and-bound over the axis-aligned keep-out squares."""

    name = "miqp"

    def admits(self, c, pairs, d_safe):
        return bool(np.all(BigMProjection(c=c, pairs=pairs, d_safe=d_safe, n_p=self.n_p).violation(c) <= 0))

    def _solve(self, c, pairs, d_safe, seed):
        return solve_miqp(BigMProjection(c=c, pairs=pairs, d_safe=d_safe, n_p=self.n_p)).z


class OracleProjector(CentredProjector):
    """Multi-start local search: cyclic pairwise pushes then SLSQP, best of all starts."""

    name = "oracle"

    def __init__(self, n_p: int = 2, starts: int = ORACLE_STARTS):
        super().__init__(n_p)
        self.starts = starts

    def _solve(self, c, pairs, d_safe, seed):
        rng = np.random.default_rng(np.random.SeedSequence(list(seed) if seed is not None else 0))
        inits = [c] + [c + rng.normal(scale=d_safe, size=c.size) for _ in range(self.starts)]
        best, best_cost = None, np.inf
        for z0 in inits:
            start = repair_separation(z0, pairs, d_safe, self.n_p)
            if start is None:
                continue
            z = polish_separation(start, c, pairs, d_safe, self.n_p)
            cost = projection_cost(z, c)
            if cost < best_cost:
                best, best_cost = z, cost
        if best is None:
            raise BackendFailure("no start could be repaired into a separated configuration")
        return best


def make_projector(backend: str, n_p: int = 2, polish: bool = True) -> PositionProjector:
    """Projector for a back-end name.

    Raises:
        ConfigError: If the name is unknown
    """
    if backend == "sdr":
        return SdrProjector(n_p=n_p, polish=polish)
    if backend == "miqp":
        return MiqpProjector(n_p=n_p)
    if backend == "oracle":
        return OracleProjector(n_p=n_p)
    raise ConfigError(f"Unknown projection backend {backend!r}", details={'backend': backend})


def project_positions(target: ProjectionTarget, backend: PositionProjector | str,
                      seed: Optional[Sequence[int]] = None) -> DoubleMatrix:
    """z_p for one timestep; every pair ends at least d_safe - 1e-6 apart.

    Raises:
        BackendFailure: With the back-end name and timestep in ``details``
    """
    projector = make_projector(backend, target.n_p) if isinstance(backend, str) else backend
    with failure_context(BackendFailure, f"{projector.name} projection failed", tau=target.tau):
        return projector.project(target.c_p, target.pairs, target.d_safe, seed)


def project_step(target: ProjectionTarget, backend: PositionProjector | str,
                 seed: Optional[Sequence[int]] = None) -> Tuple[DoubleMatrix, DoubleMatrix]:
    """(z_u, z_p) of one timestep: clamped inputs and projected positions."""
    z_u = clamp_inputs(target.c_u, target.u_lower, target.u_upper)
    return z_u, project_positions(target, backend, seed)
