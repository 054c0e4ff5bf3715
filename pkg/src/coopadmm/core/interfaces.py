"""
Interfaces for coopadmm components.
"""

from abc import ABC, abstractmethod
from typing import Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

DoubleMatrix = npt.NDArray[np.float64]


class Dynamics(ABC):
    """Abstract interface for discrete-time agent dynamics.

    The first ``n_p`` state components are the agent position.
    """

    n: int
    m: int
    n_p: int

    @abstractmethod
    def step(self, x: DoubleMatrix, u: DoubleMatrix) -> DoubleMatrix:
        """Advance one sampling period.

        Args:
            x: State vector of length n
            u: Input vector of length m

        Returns:
            Next state vector

        Raises:
            DomainError: If (x, u) lies outside the model's validity region
        """
        pass

    @abstractmethod
    def linearize(self, x: DoubleMatrix, u: DoubleMatrix) -> Tuple[DoubleMatrix, DoubleMatrix]:
        """Jacobians of ``step`` at (x, u).

        Args:
            x: State vector of length n
            u: Input vector of length m

        Returns:
            Tuple (f_x, f_u) of shapes (n, n) and (n, m)

        Raises:
            DomainError: If (x, u) lies outside the model's validity region
        """
        pass

    def linearize_trajectory(self, states: DoubleMatrix, inputs: DoubleMatrix) -> Tuple[DoubleMatrix, DoubleMatrix]:
        """Jacobians along a rollout.

        Args:
            states: (T+1, n) states; only the first T rows are used
            inputs: (T, m) inputs

        Returns:
            Tuple (f_x, f_u) of shapes (T, n, n) and (T, n, m)
        """
        pairs = [self.linearize(states[t], inputs[t]) for t in range(inputs.shape[0])]
        return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])

    def rollout(self, x0: DoubleMatrix, inputs: DoubleMatrix) -> DoubleMatrix:
        """Roll the model forward from x0 under the given input sequence.

        Args:
            x0: Initial state
            inputs: (T, m) inputs

        Returns:
            (T+1, n) states
        """
        states = np.empty((inputs.shape[0] + 1, self.n))
        states[0] = x0
        for t in range(inputs.shape[0]):
            states[t + 1] = self.step(states[t], inputs[t])
        return states


class PositionProjector(ABC):
    """Abstract interface for the per-timestep nonconvex position projection."""

    name: str

    @abstractmethod
    def project(self, c_p: DoubleMatrix, pairs: Sequence[Tuple[int, int]], d_safe: float,
                seed: Optional[Sequence[int]] = None) -> DoubleMatrix:
        """Project stacked positions onto the pairwise-separation set.

        Args:
            c_p: Stacked target positions of length N * n_p
            pairs: Deduplicated (i, j) pairs with i < j
            d_safe: Minimum separation distance
            seed: Entropy for randomised back-ends

        Returns:
            Stacked positions with every pair at least d_safe apart

        Raises:
            BackendFailure: If the back-end cannot produce a feasible point
        """
        pass


class ProgressSink(ABC):
    """Abstract interface for receivers of ADMM progress records."""

    @abstractmethod
    def __call__(self, record: dict) -> None:
        """Consume one per-iteration progress record.

        Args:
            record: Mapping with iteration, residual, dual_residual, y_step_ms and z_step_ms
        """
        pass
