"""
Discrete-time kinematic bicycle model and linear dynamics.

State x = (p_x, p_y, theta, v), input u = (delta, a). Heading is never wrapped.
"""

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from coopadmm.core.constants import (
    DEFAULT_TAU_S, DEFAULT_VEHICLE_LENGTH, DEFAULT_VEHICLE_WIDTH, DEFAULT_WHEELBASE,
    INPUT_DIM, POSITION_DIM, STATE_DIM,
)
from coopadmm.core.exceptions import ConfigError, DomainError
from coopadmm.core.interfaces import DoubleMatrix, Dynamics


@dataclass(frozen=True)
class VehicleState:
    """Bicycle model state."""

    p_x: float
    p_y: float
    theta: float
    v: float

    def __array__(self, dtype=None, copy=None) -> DoubleMatrix:
        return np.array([self.p_x, self.p_y, self.theta, self.v], dtype=dtype or np.float64)

    @classmethod
    def from_array(cls, x) -> "VehicleState":
        return cls(float(x[0]), float(x[1]), float(x[2]), float(x[3]))


@dataclass(frozen=True)
class ControlInput:
    """Steering angle delta (rad) and acceleration a (m/s^2)."""

    delta: float
    a: float

    def __array__(self, dtype=None, copy=None) -> DoubleMatrix:
        return np.array([self.delta, self.a], dtype=dtype or np.float64)

    @classmethod
    def from_array(cls, u) -> "ControlInput":
        return cls(float(u[0]), float(u[1]))


@dataclass(frozen=True)
class VehicleParams:
    """Geometric and sampling parameters of one vehicle.

    Args:
        b: Wheelbase, meters
        tau_s: Sampling time, seconds
        length: Body length, meters (plotting only)
        width: Body width, meters (plotting only)
    """

    b: float = DEFAULT_WHEELBASE
    tau_s: float = DEFAULT_TAU_S
    length: float = DEFAULT_VEHICLE_LENGTH
    width: float = DEFAULT_VEHICLE_WIDTH

    def __post_init__(self) -> None:
        if not self.b > 0:
            raise ConfigError(f"Wheelbase must be positive, got {self.b}")
        if not self.tau_s > 0:
            raise ConfigError(f"Sampling time must be positive, got {self.tau_s}")
        if self.length <= 0 or self.width <= 0:
            raise ConfigError("Vehicle length and width must be positive")


StateLike = Union[VehicleState, DoubleMatrix]
InputLike = Union[ControlInput, DoubleMatrix]


def _lateral(v: float, delta: float, params: VehicleParams) -> Tuple[float, float]:
    """Return (s, b^2 - s^2) with s = tau_s * v * sin(delta)."""
    s = params.tau_s * v * math.sin(delta)
    return s, params.b * params.b - s * s


def rollout_distance(v: float, delta: float, params: VehicleParams) -> float:
    """Distance f_r travelled along the heading during one step.

    Args:
        v: Speed, m/s
        delta: Steering angle, rad
        params: Vehicle parameters

    Returns:
        b + tau_s v cos(delta) - sqrt(b^2 - (tau_s v sin(delta))^2)

    Raises:
        DomainError: If the square-root argument is negative
    """
    _, disc = _lateral(v, delta, params)
    if disc < 0:
        raise DomainError(
            f"Kinematic validity violated at v={v:.6g}, delta={delta:.6g}",
            details={'v': v, 'delta': delta, 'b': params.b, 'tau_s': params.tau_s},
        )
    return params.b + params.tau_s * v * math.cos(delta) - math.sqrt(disc)


def _step_values(px: float, py: float, theta: float, v: float, delta: float, a: float,
                 params: VehicleParams) -> Tuple[float, float, float, float]:
    s, disc = _lateral(v, delta, params)
    if disc < 0:
        raise DomainError(
            f"Kinematic validity violated at v={v:.6g}, delta={delta:.6g}",
            details={'v': v, 'delta': delta, 'b': params.b, 'tau_s': params.tau_s},
        )
    f_r = params.b + params.tau_s * v * math.cos(delta) - math.sqrt(disc)
    # disc >= 0 bounds |s / b| by 1 up to rounding
    ratio = min(1.0, max(-1.0, s / params.b))
    return (
        px + f_r * math.cos(theta),
        py + f_r * math.sin(theta),
        theta + math.asin(ratio),
        v + params.tau_s * a,
    )


def step(x: StateLike, u: InputLike, params: VehicleParams) -> VehicleState:
    """Advance a vehicle state by one sampling period.

    Raises:
        DomainError: If (v, delta) lies outside the kinematic validity region
    """
    xa = np.asarray(x, dtype=float)
    ua = np.asarray(u, dtype=float)
    return VehicleState(*_step_values(xa[0], xa[1], xa[2], xa[3], ua[0], ua[1], params))


def linearize(x: StateLike, u: InputLike, params: VehicleParams) -> Tuple[DoubleMatrix, DoubleMatrix]:
    """Analytic Jacobians (f_x, f_u) of ``step`` at (x, u).

    Raises:
        DomainError: If b^2 - (tau_s v sin(delta))^2 is not strictly positive
    """
    f_x, f_u = _linearize_batch(np.asarray(x, dtype=float)[None, :], np.asarray(u, dtype=float)[None, :], params)
    return f_x[0], f_u[0]


def _linearize_batch(states: DoubleMatrix, inputs: DoubleMatrix,
                     params: VehicleParams) -> Tuple[DoubleMatrix, DoubleMatrix]:
    theta, v = states[:, 2], states[:, 3]
    delta = inputs[:, 0]
    tau, b = params.tau_s, params.b

    sin_d, cos_d = np.sin(delta), np.cos(delta)
    s = tau * v * sin_d
    disc = b * b - s * s
    if np.any(disc <= 0):
        bad = int(np.argmax(disc <= 0))
        raise DomainError(
            f"Jacobian undefined at step {bad}: v={v[bad]:.6g}, delta={delta[bad]:.6g}",
            details={'index': bad},
        )
    r = np.sqrt(disc)
    f_r = b + tau * v * cos_d - r
    dfr_dv = tau * cos_d + s * tau * sin_d / r
    dfr_dd = -tau * v * sin_d + s * tau * v * cos_d / r
    sin_t, cos_t = np.sin(theta), np.cos(theta)

    count = states.shape[0]
    f_x = np.zeros((count, STATE_DIM, STATE_DIM))
    f_x[:, 0, 0] = 1.0
    f_x[:, 1, 1] = 1.0
    f_x[:, 2, 2] = 1.0
    f_x[:, 3, 3] = 1.0
    f_x[:, 0, 2] = -f_r * sin_t
    f_x[:, 0, 3] = dfr_dv * cos_t
    f_x[:, 1, 2] = f_r * cos_t
    f_x[:, 1, 3] = dfr_dv * sin_t
    f_x[:, 2, 3] = tau * sin_d / r

    f_u = np.zeros((count, STATE_DIM, INPUT_DIM))
    f_u[:, 0, 0] = dfr_dd * cos_t
    f_u[:, 1, 0] = dfr_dd * sin_t
    f_u[:, 2, 0] = tau * v * cos_d / r
    f_u[:, 3, 1] = tau
    return f_x, f_u


class BicycleDynamics(Dynamics):
    """Kinematic bicycle model on flat state arrays."""

    n = STATE_DIM
    m = INPUT_DIM
    n_p = POSITION_DIM

    def __init__(self, params: VehicleParams | None = None):
        self.params = params or VehicleParams()

    def step(self, x: DoubleMatrix, u: DoubleMatrix) -> DoubleMatrix:
        return np.array(_step_values(float(x[0]), float(x[1]), float(x[2]), float(x[3]),
                                     float(u[0]), float(u[1]), self.params))

    def linearize(self, x: DoubleMatrix, u: DoubleMatrix) -> Tuple[DoubleMatrix, DoubleMatrix]:
        return linearize(x, u, self.params)

    def linearize_trajectory(self, states: DoubleMatrix, inputs: DoubleMatrix) -> Tuple[DoubleMatrix, DoubleMatrix]:
        steps = inputs.shape[0]
        return _linearize_batch(np.asarray(states[:steps], dtype=float), np.asarray(inputs, dtype=float), self.params)


class LinearDynamics(Dynamics):
    """x' = A x + B u, with the first n_p states read as position."""

    def __init__(self, A: DoubleMatrix, B: DoubleMatrix, n_p: int | None = None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        if self.A.shape[0] != self.A.shape[1] or self.B.shape[0] != self.A.shape[0]:
            raise ConfigError(f"Incompatible shapes A{self.A.shape}, B{self.B.shape}")
        self.n = self.A.shape[0]
        self.m = self.B.shape[1]
        self.n_p = min(POSITION_DIM, self.n) if n_p is None else n_p
        if not 0 < self.n_p <= self.n:
            raise ConfigError(f"Position dimension {self.n_p} out of range for n={self.n}")

    def step(self, x: DoubleMatrix, u: DoubleMatrix) -> DoubleMatrix:
        return self.A @ x + self.B @ u

    def linearize(self, x: DoubleMatrix, u: DoubleMatrix) -> Tuple[DoubleMatrix, DoubleMatrix]:
        return self.A.copy(), self.B.copy()

    def linearize_trajectory(self, states: DoubleMatrix, inputs: DoubleMatrix) -> Tuple[DoubleMatrix, DoubleMatrix]:
        steps = inputs.shape[0]
        return np.broadcast_to(self.A, (steps,) + self.A.shape).copy(), \
            np.broadcast_to(self.B, (steps,) + self.B.shape).copy()
