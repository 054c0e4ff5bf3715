"""
Problem data shared by the solvers: weights, bounds, agents and the coupled problem.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from coopadmm.core.constants import DEFAULT_D_SAFE
from coopadmm.core.exceptions import ConfigError
from coopadmm.core.interfaces import DoubleMatrix, Dynamics
from coopadmm.model.layout import HorizonLayout
from coopadmm.model.topology import ConstraintGraph


@dataclass(frozen=True)
class CostWeights:
    """Tracking weight Q, input weight R and the reference states x_r,1..x_r,T."""

    Q: DoubleMatrix
    R: DoubleMatrix
    reference: DoubleMatrix

    def __post_init__(self) -> None:
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        ref = np.atleast_2d(np.asarray(self.reference, dtype=float))
        object.__setattr__(self, 'Q', Q)
        object.__setattr__(self, 'R', R)
        object.__setattr__(self, 'reference', ref)
        if not np.allclose(Q, Q.T) or not np.allclose(R, R.T):
            raise ConfigError("Weights Q and R must be symmetric")
        if np.linalg.eigvalsh(Q).min() < -1e-12:
            raise ConfigError("Tracking weight Q must be positive semidefinite")
        if np.linalg.eigvalsh(R).min() <= 0:
            raise ConfigError("Input weight R must be positive definite")
        if ref.shape[1] != Q.shape[0]:
            raise ConfigError(f"Reference has {ref.shape[1]} columns, expected {Q.shape[0]}")


@dataclass(frozen=True)
class Bounds:
    """Input box and optional state box; arrays broadcast over the horizon."""

    u_lower: DoubleMatrix
    u_upper: DoubleMatrix
    x_lower: Optional[DoubleMatrix] = None
    x_upper: Optional[DoubleMatrix] = None

    def __post_init__(self) -> None:
        for lo_name, hi_name in (("u_lower", "u_upper"), ("x_lower", "x_upper")):
            lo, hi = getattr(self, lo_name), getattr(self, hi_name)
            if lo is None and hi is None:
                continue
            if lo is None or hi is None:
                raise ConfigError(f"{lo_name} and {hi_name} must be given together")
            lo = np.asarray(lo, dtype=float)
            hi = np.asarray(hi, dtype=float)
            if np.any(lo > hi):
                raise ConfigError(f"{lo_name} must not exceed {hi_name} element-wise")
            object.__setattr__(self, lo_name, lo)
            object.__setattr__(self, hi_name, hi)

    @classmethod
    def unbounded(cls, m: int) -> "Bounds":
        return cls(np.full(m, -np.inf), np.full(m, np.inf))

    @property
    def has_state_bounds(self) -> bool:
        return self.x_lower is not None

    def clamp_inputs(self, u: DoubleMatrix) -> DoubleMatrix:
        return np.clip(u, self.u_lower, self.u_upper)


@dataclass(frozen=True)
class AgentSpec:
    """One vehicle's subproblem data."""

    dynamics: Dynamics
    x0: DoubleMatrix
    weights: CostWeights
    bounds: Bounds

    def __post_init__(self) -> None:
        object.__setattr__(self, 'x0', np.asarray(self.x0, dtype=float).copy())
        if self.x0.shape != (self.dynamics.n,):
            raise ConfigError(f"Initial state has shape {self.x0.shape}, expected ({self.dynamics.n},)")
        if self.weights.Q.shape != (self.dynamics.n, self.dynamics.n):
            raise ConfigError("Q shape does not match the state dimension")
        if self.weights.R.shape != (self.dynamics.m, self.dynamics.m):
            raise ConfigError("R shape does not match the input dimension")


@dataclass
class CoopProblem:
    """Coupled multi-agent problem: agents over a common horizon plus pairwise separation."""

    agents: List[AgentSpec]
    T: int
    d_safe: float = DEFAULT_D_SAFE
    graph: Optional[ConstraintGraph] = None
    layout: HorizonLayout = field(init=False)

    def __post_init__(self) -> None:
        if not self.agents:
            raise ConfigError("Problem needs at least one agent")
        first = self.agents[0].dynamics
        for k, agent in enumerate(self.agents):
            dyn = agent.dynamics
            if (dyn.n, dyn.m, dyn.n_p) != (first.n, first.m, first.n_p):
                raise ConfigError(f"Agent {k} dimensions differ from agent 0")
            if agent.weights.reference.shape[0] != self.T:
                raise ConfigError(f"Agent {k} reference has {agent.weights.reference.shape[0]} rows, expected T={self.T}")
        if self.d_safe < 0:
            raise ConfigError(f"d_safe must be nonnegative, got {self.d_safe}")
        if self.graph is not None and self.graph.N != len(self.agents):
            raise ConfigError("Constraint graph size does not match agent count")
        self.layout = HorizonLayout(N=len(self.agents), T=self.T, n=first.n, m=first.m, n_p=first.n_p)

    @property
    def pairs(self) -> List[Tuple[int, int]]:
        """Deduplicated constrained pairs (i < j)."""
        if self.graph is None:
            return []
        return list(self.graph.pairs())

    def input_bounds_stacked(self) -> Tuple[DoubleMatrix, DoubleMatrix]:
        """Per-step input box over all vehicles, shape (T, N*m) each."""
        m, T = self.layout.m, self.T
        lower = np.hstack([np.broadcast_to(a.bounds.u_lower, (T, m)) for a in self.agents])
        upper = np.hstack([np.broadcast_to(a.bounds.u_upper, (T, m)) for a in self.agents])
        return lower, upper

    def initial_positions(self) -> DoubleMatrix:
        return np.array([a.x0[:self.layout.n_p] for a in self.agents])
