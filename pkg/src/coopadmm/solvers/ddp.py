"""
Gauss-Newton differential dynamic programming (iLQR) for one agent.

Stage t pays the state cost at x_t (t >= 1) and the input cost at u_t; the terminal
value is the state cost at x_T. The ADMM augmentation adds (sigma/2)|p_{t+1} - tp_t|^2
and (sigma/2)|u_t - tu_t|^2.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from coopadmm.core.constants import (
    DDP_ROUNDOFF_TOL, DEFAULT_DDP_ALPHA_MIN, DEFAULT_DDP_MAX_ITER, DEFAULT_DDP_REG_INIT, DEFAULT_DDP_REG_MAX,
    DEFAULT_DDP_REG_MIN, DEFAULT_DDP_TOL, DEFAULT_STATE_PENALTY,
)
from coopadmm.core.exceptions import ConfigError, DomainError, NotPositiveDefinite
from coopadmm.core.interfaces import DoubleMatrix, Dynamics
from coopadmm.model.problem import AgentSpec, Bounds

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DdpOptions:
    """Iteration limits, tolerances and regularisation schedule."""

    max_iterations: int = DEFAULT_DDP_MAX_ITER
    tol: float = DEFAULT_DDP_TOL
    reg_init: float = DEFAULT_DDP_REG_INIT
    reg_min: float = DEFAULT_DDP_REG_MIN
    reg_max: float = DEFAULT_DDP_REG_MAX
    alpha_min: float = DEFAULT_DDP_ALPHA_MIN
    state_penalty: float = DEFAULT_STATE_PENALTY

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ConfigError("DDP max_iterations must be at least 1")
        if self.tol <= 0 or self.reg_init < 0 or self.reg_min < 0 or self.reg_max <= 0:
            raise ConfigError("DDP tolerances and regularisation bounds must be positive")
        if not 0 < self.alpha_min <= 1:
            raise ConfigError("DDP alpha_min must lie in (0, 1]")


@dataclass
class Trajectory:
    """(T+1, n) states and (T, m) inputs."""

    states: DoubleMatrix
    inputs: DoubleMatrix

    @property
    def horizon(self) -> int:
        return self.inputs.shape[0]

    def copy(self) -> "Trajectory":
        return Trajectory(self.states.copy(), self.inputs.copy())


@dataclass
class StageCostModel:
    """Quadratic tracking cost plus the ADMM proximal term.

    Args:
        Q: (n, n) tracking weight
        R: (m, m) input weight
        reference: (T, n) reference for x_1..x_T
        sigma: ADMM penalty; 0 disables the augmentation
        position_target: (T, n_p) targets for p_1..p_T
        input_target: (T, m) targets for u_0..u_{T-1}
        n_p: Number of leading state components read as position
        offset: Constant added to the cost
        x_lower: Optional state lower bound, penalised outside
        x_upper: Optional state upper bound, penalised outside
        state_penalty: Weight of the exterior state-bound penalty
    """

    Q: DoubleMatrix
    R: DoubleMatrix
    reference: DoubleMatrix
    sigma: float = 0.0
    position_target: Optional[DoubleMatrix] = None
    input_target: Optional[DoubleMatrix] = None
    n_p: int = 2
    offset: float = 0.0
    x_lower: Optional[DoubleMatrix] = None
    x_upper: Optional[DoubleMatrix] = None
    state_penalty: float = 0.0
    _S: DoubleMatrix = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ConfigError(f"sigma must be nonnegative, got {self.sigma}")
        n = self.Q.shape[0]
        self._S = np.eye(n)[:self.n_p]

    @classmethod
    def for_agent(cls, agent: AgentSpec, sigma: float = 0.0, position_target: Optional[DoubleMatrix] = None,
                  input_target: Optional[DoubleMatrix] = None, state_penalty: float = DEFAULT_STATE_PENALTY
                  ) -> "StageCostModel":
        bounds = agent.bounds
        return cls(
            Q=agent.weights.Q, R=agent.weights.R, reference=agent.weights.reference, sigma=sigma,
            position_target=position_target, input_target=input_target, n_p=agent.dynamics.n_p,
            x_lower=bounds.x_lower, x_upper=bounds.x_upper,
            state_penalty=state_penalty if bounds.has_state_bounds else 0.0,
        )

    def _state_violation(self, xs: DoubleMatrix):
        if self.x_lower is None or self.state_penalty == 0:
            return None
        upper = np.maximum(xs - self.x_upper, 0.0)
        lower = np.maximum(self.x_lower - xs, 0.0)
        return upper, lower

    def total(self, traj: Trajectory) -> float:
        """Cost of a trajectory."""
        xs = traj.states[1:]
        us = traj.inputs
        dx = xs - self.reference
        cost = np.einsum('ti,ij,tj->', dx, self.Q, dx) + np.einsum('ti,ij,tj->', us, self.R, us)
        if self.sigma > 0:
            if self.position_target is not None:
                cost += 0.5 * self.sigma * np.sum((xs[:, :self.n_p] - self.position_target) ** 2)
            if self.input_target is not None:
                cost += 0.5 * self.sigma * np.sum((us - self.input_target) ** 2)
        viol = self._state_violation(xs)
        if viol is not None:
            cost += self.state_penalty * (np.sum(viol[0] ** 2) + np.sum(viol[1] ** 2))
        return float(cost + self.offset)

    def derivatives(self, traj: Trajectory):
        """Gradients and Hessians of the cost.

        Returns:
            Tuple (l_x, l_xx, l_u, l_uu) with l_x (T+1, n), l_xx (T+1, n, n), l_u (T, m), l_uu (T, m, m);
            row 0 of the state terms is zero
        """
        T, n = traj.horizon, self.Q.shape[0]
        m = self.R.shape[0]
        xs = traj.states[1:]
        us = traj.inputs

        l_x = np.zeros((T + 1, n))
        l_xx = np.zeros((T + 1, n, n))
        l_x[1:] = 2.0 * (xs - self.reference) @ self.Q
        l_xx[1:] = 2.0 * self.Q
        l_u = 2.0 * us @ self.R
        l_uu = np.broadcast_to(2.0 * self.R, (T, m, m)).copy()

        if self.sigma > 0:
            if self.position_target is not None:
                l_x[1:, :self.n_p] += self.sigma * (xs[:, :self.n_p] - self.position_target)
                l_xx[1:] += self.sigma * (self._S.T @ self._S)
            if self.input_target is not None:
                l_u += self.sigma * (us - self.input_target)
                l_uu += self.sigma * np.eye(m)
        viol = self._state_violation(xs)
        if viol is not None:
            upper, lower = viol
            w = self.state_penalty
            l_x[1:] += 2.0 * w * (upper - lower)
            active = ((upper > 0) | (lower > 0)).astype(float)
            l_xx[1:] += 2.0 * w * active[:, :, None] * np.eye(n)[None, :, :]
        return l_x, l_xx, l_u, l_uu


@dataclass
class GainSchedule:
    """Feedforward k (T, m), feedback K (T, m, n) and per-step predicted reduction."""

    k: DoubleMatrix
    K: DoubleMatrix
    delta_v: DoubleMatrix
    dv_linear: float = 0.0
    dv_quadratic: float = 0.0

    def expected_reduction(self, alpha: float) -> float:
        return alpha * self.dv_linear + alpha * alpha * self.dv_quadratic


@dataclass
class DdpResult:
    trajectory: Trajectory
    cost: float
    iterations: int
    converged: bool
    reg: float


def rollout(dynamics: Dynamics, x0: DoubleMatrix, inputs: DoubleMatrix) -> Trajectory:
    """Consistent trajectory from x0 under ``inputs``."""
    return Trajectory(dynamics.rollout(np.asarray(x0, dtype=float), inputs), np.array(inputs, dtype=float))


def backward_pass(traj: Trajectory, cost: StageCostModel, dynamics: Dynamics, reg: float) -> GainSchedule:
    """Riccati-like sweep producing the affine control update.

    Args:
        traj: Nominal consistent trajectory
        cost: Stage cost model
        dynamics: Model providing Jacobians along the trajectory
        reg: Levenberg regularisation added to Q_uu

    Returns:
        GainSchedule

    Raises:
        NotPositiveDefinite: If Q_uu + reg I fails its Cholesky factorization
        DomainError: If the Jacobians are undefined along the trajectory
    """
    T = traj.horizon
    n, m = dynamics.n, dynamics.m
    f_x, f_u = dynamics.linearize_trajectory(traj.states, traj.inputs)
    l_x, l_xx, l_u, l_uu = cost.derivatives(traj)

    k = np.zeros((T, m))
    K = np.zeros((T, m, n))
    delta_v = np.zeros(T)
    dv_linear = 0.0
    dv_quadratic = 0.0

    V_x = l_x[T].copy()
    V_xx = l_xx[T].copy()
    eye_m = np.eye(m)
    for t in range(T - 1, -1, -1):
        A, B = f_x[t], f_u[t]
        Q_x = l_x[t] + A.T @ V_x
        Q_u = l_u[t] + B.T @ V_x
        Q_xx = l_xx[t] + A.T @ V_xx @ A
        Q_ux = B.T @ V_xx @ A
        Q_uu = l_uu[t] + B.T @ V_xx @ B

        try:
            factor = cho_factor(Q_uu + reg * eye_m)
        except LinAlgError as e:
            raise NotPositiveDefinite(f"Q_uu + {reg:.3g} I is not positive definite at step {t}",
                                      details={'step': t, 'reg': reg}) from e
        k_t = -cho_solve(factor, Q_u)
        K_t = -cho_solve(factor, Q_ux)

        V_x = Q_x + K_t.T @ Q_uu @ k_t + K_t.T @ Q_u + Q_ux.T @ k_t
        V_xx = Q_xx + K_t.T @ Q_uu @ K_t + K_t.T @ Q_ux + Q_ux.T @ K_t
        V_xx = 0.5 * (V_xx + V_xx.T)

        k[t] = k_t
        K[t] = K_t
        delta_v[t] = 0.5 * Q_u @ k_t
        dv_linear += float(k_t @ Q_u)
        dv_quadratic += float(0.5 * k_t @ Q_uu @ k_t)
    return GainSchedule(k=k, K=K, delta_v=delta_v, dv_linear=dv_linear, dv_quadratic=dv_quadratic)


def forward_pass(traj: Trajectory, gains: GainSchedule, alpha: float, dynamics: Dynamics,
                 bounds: Optional[Bounds] = None) -> Trajectory:
    """Roll out the updated policy u = u_hat + alpha k + K (x - x_hat), clamped to the input box.

    Raises:
        DomainError: If the rollout leaves the model's validity region
    """
    T = traj.horizon
    states = np.empty_like(traj.states)
    inputs = np.empty_like(traj.inputs)
    states[0] = traj.states[0]
    for t in range(T):
        u = traj.inputs[t] + alpha * gains.k[t] + gains.K[t] @ (states[t] - traj.states[t])
        if bounds is not None:
            u = bounds.clamp_inputs(u)
        inputs[t] = u
        states[t + 1] = dynamics.step(states[t], u)
    return Trajectory(states, inputs)


def _step_norm(traj: Trajectory, gains: GainSchedule, bounds: Optional[Bounds]) -> float:
    """Largest entry of the feedforward step after clamping; zero at a stationary point."""
    if bounds is None:
        step = gains.k
    else:
        step = bounds.clamp_inputs(traj.inputs + gains.k) - traj.inputs
    return float(np.max(np.abs(step), initial=0.0))


def initial_trajectory(dynamics: Dynamics, x0: DoubleMatrix, T: int) -> Trajectory:
    """Rollout of x0 under zero inputs."""
    return rollout(dynamics, x0, np.zeros((T, dynamics.m)))


def solve_agent(cost: StageCostModel, dynamics: Dynamics, x0: DoubleMatrix, bounds: Optional[Bounds] = None,
                init: Optional[Trajectory] = None, opts: DdpOptions = DdpOptions()) -> DdpResult:
    """Iterate backward and forward passes with backtracking.

    Stops when the clamped feedforward step is at most opts.tol in every entry, or when a
    full (alpha = 1) step lowers the cost by less than opts.tol relative.

    Args:
        cost: Stage cost model
        dynamics: Agent dynamics
        x0: Initial state
        bounds: Input box enforced by clamping
        init: Initial guess; zero-input rollout when omitted
        opts: DDP options

    Returns:
        DdpResult whose trajectory never costs more than the (clamped) initial guess

    Raises:
        NotPositiveDefinite: If regularisation must exceed opts.reg_max
    """
    T = cost.reference.shape[0]
    if init is None:
        traj = initial_trajectory(dynamics, x0, T)
    else:
        inputs = bounds.clamp_inputs(init.inputs) if bounds is not None else init.inputs
        traj = rollout(dynamics, x0, inputs)
    if bounds is not None and not np.array_equal(traj.inputs, bounds.clamp_inputs(traj.inputs)):
        traj = rollout(dynamics, x0, bounds.clamp_inputs(traj.inputs))

    J = cost.total(traj)
    reg = opts.reg_init
    converged = False
    iteration = 0

    while iteration < opts.max_iterations:
        iteration += 1
        try:
            gains = backward_pass(traj, cost, dynamics, reg)
        except NotPositiveDefinite:
            reg = max(reg * 10.0, opts.reg_min, DEFAULT_DDP_REG_INIT)
            logger.debug(f"Backward pass failed, regularisation raised to {reg:.3g}")
            if reg > opts.reg_max:
                raise NotPositiveDefinite(f"Regularisation exceeded {opts.reg_max:.3g}",
                                          details={'reg': reg, 'iteration': iteration})
            continue
        except DomainError as e:
            logger.warning(f"Jacobians undefined along the nominal trajectory: {e}")
            break

        if _step_norm(traj, gains, bounds) <= opts.tol:
            converged = True
            break

        alpha = 1.0
        accepted = None
        while alpha >= opts.alpha_min:
            try:
                candidate = forward_pass(traj, gains, alpha, dynamics, bounds)
            except DomainError:
                alpha *= 0.5
                continue
            J_new = cost.total(candidate)
            if np.isfinite(J_new) and J_new < J:
                accepted = (candidate, J_new)
                break
            alpha *= 0.5

        if accepted is None:
            if -gains.expected_reduction(1.0) <= DDP_ROUNDOFF_TOL * max(1.0, abs(J)):
                converged = True
                break
            reg = max(reg * 2.0, opts.reg_min, DEFAULT_DDP_REG_INIT)
            logger.debug(f"Line search exhausted at iteration {iteration}, regularisation {reg:.3g}")
            if reg > opts.reg_max:
                break
            continue

        candidate, J_new = accepted
        relative = (J - J_new) / max(1.0, abs(J))
        traj, J = candidate, J_new
        reg = max(reg * 0.5, opts.reg_min) if reg > 0 else 0.0
        logger.debug(f"DDP iteration {iteration}: cost {J:.10g}, alpha {alpha:.3g}")
        if alpha == 1.0 and relative < opts.tol:
            converged = True
            break

    return DdpResult(trajectory=traj, cost=J, iterations=iteration, converged=converged, reg=reg)
