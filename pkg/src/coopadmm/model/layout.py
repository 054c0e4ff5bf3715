"""
Stacked consensus variables and the index maps standing in for the selection matrices.

y blocks are (x_{i,t+1}, u_{i,t}), z and lambda blocks are (p_{i,t+1}, u_{i,t}),
ordered vehicle-major then time.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np

from coopadmm.core.exceptions import ConfigError
from coopadmm.core.interfaces import DoubleMatrix


@dataclass(frozen=True)
class HorizonLayout:
    """Dimensions of the stacked problem.

    Args:
        N: Vehicle count
        T: Prediction horizon, steps
        n: State dimension
        m: Input dimension
        n_p: Position dimension (leading state components)
    """

    N: int
    T: int
    n: int = 4
    m: int = 2
    n_p: int = 2

    def __post_init__(self) -> None:
        for name in ("N", "T", "n", "m", "n_p"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value <= 0:
                raise ConfigError(f"Layout field {name} must be a positive integer, got {value!r}")
        if self.n_p > self.n:
            raise ConfigError(f"Position dimension {self.n_p} exceeds state dimension {self.n}")

    @property
    def y_block(self) -> int:
        return self.n + self.m

    @property
    def z_block(self) -> int:
        return self.n_p + self.m

    @property
    def y_size(self) -> int:
        return self.N * self.T * self.y_block

    @property
    def z_size(self) -> int:
        return self.N * self.T * self.z_block

    def y_offset(self, i: int, t: int) -> int:
        """Start of block (i, t) in y; t indexes the input step 0..T-1."""
        return (i * self.T + t) * self.y_block

    def z_offset(self, i: int, t: int) -> int:
        """Start of block (i, t) in z and lambda."""
        return (i * self.T + t) * self.z_block

    @cached_property
    def t_index(self) -> np.ndarray:
        """Source index in y of every entry of z."""
        local = np.concatenate([np.arange(self.n_p), self.n + np.arange(self.m)])
        starts = np.arange(self.N * self.T) * self.y_block
        return (starts[:, None] + local[None, :]).ravel()

    def zeros_y(self) -> DoubleMatrix:
        return np.zeros(self.y_size)

    def zeros_z(self) -> DoubleMatrix:
        return np.zeros(self.z_size)

    def agent_y(self, i: int) -> slice:
        """Contiguous slice of agent i in y."""
        span = self.T * self.y_block
        return slice(i * span, (i + 1) * span)

    def agent_z(self, i: int) -> slice:
        """Contiguous slice of agent i in z and lambda."""
        span = self.T * self.z_block
        return slice(i * span, (i + 1) * span)

    def position_index(self, t: int) -> np.ndarray:
        """Indices in z of all positions p_{i,t+1}, stacked by vehicle (the per-step position selector)."""
        return np.concatenate([self.z_offset(i, t) + np.arange(self.n_p) for i in range(self.N)])

    def input_index(self, t: int) -> np.ndarray:
        """Indices in z of all inputs u_{i,t}, stacked by vehicle (the per-step input selector)."""
        return np.concatenate([self.z_offset(i, t) + self.n_p + np.arange(self.m) for i in range(self.N)])


def select_T(layout: HorizonLayout, y: DoubleMatrix) -> DoubleMatrix:
    """Extract the (position, input) components of every y block."""
    return np.asarray(y, dtype=float)[layout.t_index]


def primal_residual(layout: HorizonLayout, y: DoubleMatrix, z: DoubleMatrix) -> float:
    """Euclidean norm of select_T(y) - z."""
    return float(np.linalg.norm(select_T(layout, y) - np.asarray(z, dtype=float)))


def pack_agent(layout: HorizonLayout, states: DoubleMatrix, inputs: DoubleMatrix) -> DoubleMatrix:
    """Stack one agent's (T+1, n) states and (T, m) inputs into its y slice; x_0 is dropped."""
    return np.hstack([states[1:], inputs]).ravel()


def unpack_agent(layout: HorizonLayout, y_i: DoubleMatrix, x0: DoubleMatrix) -> Tuple[DoubleMatrix, DoubleMatrix]:
    """Inverse of ``pack_agent`` given the fixed initial state."""
    blocks = np.asarray(y_i, dtype=float).reshape(layout.T, layout.y_block)
    states = np.vstack([np.asarray(x0, dtype=float)[None, :], blocks[:, :layout.n]])
    return states, blocks[:, layout.n:].copy()


def agent_targets(layout: HorizonLayout, v_i: DoubleMatrix) -> Tuple[DoubleMatrix, DoubleMatrix]:
    """Split an agent's z-shaped slice into (T, n_p) position and (T, m) input targets."""
    blocks = np.asarray(v_i, dtype=float).reshape(layout.T, layout.z_block)
    return blocks[:, :layout.n_p].copy(), blocks[:, layout.n_p:].copy()
