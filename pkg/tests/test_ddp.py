"""
Tests for the per-agent DDP solver.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.optimize import minimize

from coopadmm.core.exceptions import DomainError, NotPositiveDefinite
from coopadmm.model.dynamics import BicycleDynamics, LinearDynamics
from coopadmm.model.problem import Bounds
from coopadmm.solvers.ddp import (
    DdpOptions, GainSchedule, StageCostModel, Trajectory, backward_pass, forward_pass,
    initial_trajectory, rollout, solve_agent,
)

EXACT = DdpOptions(reg_init=0.0, reg_min=0.0)


def _riccati(A, B, Q, R, T):
    """Finite-horizon gains K_0..K_{T-1} and P_0 for sum_t x_{t+1}'Q x_{t+1} + u_t'R u_t."""
    P = Q.copy()
    gains = [None] * T
    for t in range(T - 1, -1, -1):
        K = -np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
        stage = Q if t >= 1 else np.zeros_like(Q)
        P = stage + A.T @ P @ A + A.T @ P @ B @ K
        P = 0.5 * (P + P.T)
        gains[t] = K
    return gains, P


def _lqr_instance(rng, n=4, m=2, T=20):
    A = np.eye(n) + 0.1 * rng.normal(size=(n, n))
    B = 0.5 * rng.normal(size=(n, m))
    M = 0.5 * rng.normal(size=(n, n))
    N = rng.normal(size=(m, m))
    Q = M @ M.T
    R = N @ N.T + 0.1 * np.eye(m)
    x0 = rng.normal(size=n)
    cost = StageCostModel(Q=Q, R=R, reference=np.zeros((T, n)))
    return LinearDynamics(A, B), cost, x0


def test_backward_pass_matches_riccati(rng):
    """Test feedback gains and one-step optimum against the Riccati recursion."""
    for _ in range(50):
        dyn, cost, x0 = _lqr_instance(rng)
        T = cost.reference.shape[0]
        gains_ref, P0 = _riccati(dyn.A, dyn.B, cost.Q, cost.R, T)
        nominal = initial_trajectory(dyn, x0, T)
        gains = backward_pass(nominal, cost, dyn, reg=0.0)
        for t in range(T):
            assert_allclose(gains.K[t], gains_ref[t], rtol=1e-8, atol=1e-9)

        updated = forward_pass(nominal, gains, 1.0, dyn)
        assert cost.total(updated) == pytest.approx(float(x0 @ P0 @ x0), rel=1e-8)
    print("  ✓ 50 random LQR instances: PASSED")


def test_solve_agent_lqr(rng):
    """Test the converged trajectory against the closed-loop Riccati rollout."""
    for _ in range(50):
        dyn, cost, x0 = _lqr_instance(rng)
        T = cost.reference.shape[0]
        gains_ref, P0 = _riccati(dyn.A, dyn.B, cost.Q, cost.R, T)
        x = x0.copy()
        inputs = []
        for t in range(T):
            u = gains_ref[t] @ x
            inputs.append(u)
            x = dyn.step(x, u)
        expected = rollout(dyn, x0, np.array(inputs))

        result = solve_agent(cost, dyn, x0, opts=EXACT)
        assert result.converged
        assert result.iterations <= 2, f"LQR took {result.iterations} iterations"
        assert_allclose(result.trajectory.inputs, expected.inputs, atol=1e-6)
        assert_allclose(result.trajectory.states, expected.states, atol=1e-6)
        assert result.cost == pytest.approx(float(x0 @ P0 @ x0), rel=1e-8)


def test_stationary_zero_cost(bicycle):
    """Test zero gains at u = 0 with no tracking weight."""
    traj = initial_trajectory(bicycle, np.array([0.0, 0.0, 0.3, 5.0]), 15)
    cost = StageCostModel(Q=np.zeros((4, 4)), R=np.eye(2), reference=traj.states[1:])
    gains = backward_pass(traj, cost, bicycle, reg=0.0)
    assert_array_equal(gains.k, np.zeros((15, 2)))
    assert gains.expected_reduction(1.0) == 0.0


def test_predicted_reduction_is_nonpositive(rng, bicycle):
    """Test every per-step predicted reduction is at most zero."""
    for _ in range(20):
        T = 25
        inputs = np.column_stack([rng.uniform(-0.4, 0.4, T), rng.uniform(-2, 2, T)])
        traj = rollout(bicycle, np.array([0.0, 0.0, rng.uniform(-3, 3), rng.uniform(1, 10)]), inputs)
        reference = traj.states[1:] + rng.normal(scale=2.0, size=(T, 4))
        cost = StageCostModel(Q=np.diag([1.0, 1.0, 1.0, 0.5]), R=np.diag([1.0, 0.1]), reference=reference,
                              sigma=10.0, position_target=rng.normal(size=(T, 2)), input_target=np.zeros((T, 2)))
        gains = backward_pass(traj, cost, bicycle, reg=1e-6)
        assert np.all(gains.delta_v <= 1e-12), "positive predicted reduction"
        assert gains.expected_reduction(1.0) <= 0.0


def test_gains_ignore_constant_offset(rng, bicycle):
    """Test adding a constant to the cost leaves the gains unchanged."""
    T = 10
    traj = initial_trajectory(bicycle, np.array([0.0, 0.0, 0.0, 6.0]), T)
    reference = rng.normal(size=(T, 4))
    base = StageCostModel(Q=np.eye(4), R=np.eye(2), reference=reference)
    shifted = StageCostModel(Q=np.eye(4), R=np.eye(2), reference=reference, offset=123.0)
    g1 = backward_pass(traj, base, bicycle, reg=1e-6)
    g2 = backward_pass(traj, shifted, bicycle, reg=1e-6)
    assert_array_equal(g1.k, g2.k)
    assert_array_equal(g1.K, g2.K)
    assert shifted.total(traj) == pytest.approx(base.total(traj) + 123.0)


def test_forward_pass_identity(bicycle):
    """Test zero gains reproduce a consistent trajectory."""
    T = 8
    inputs = np.tile([0.1, 0.5], (T, 1))
    traj = rollout(bicycle, np.array([1.0, 1.0, 0.0, 5.0]), inputs)
    zero = GainSchedule(k=np.zeros((T, 2)), K=np.zeros((T, 2, 4)), delta_v=np.zeros(T))
    for alpha in (0.0, 1.0):
        again = forward_pass(traj, zero, alpha, bicycle)
        assert_array_equal(again.states, traj.states)
        assert_array_equal(again.inputs, traj.inputs)


def test_reachable_reference_converges_immediately(bicycle):
    """Test a zero-input reachable reference costs nothing and stops at once."""
    x0 = np.array([2.0, -1.0, 0.4, 5.0])
    traj = initial_trajectory(bicycle, x0, 30)
    cost = StageCostModel(Q=np.eye(4), R=np.eye(2), reference=traj.states[1:])
    result = solve_agent(cost, bicycle, x0)
    assert result.converged
    assert result.iterations <= 2
    assert result.cost == pytest.approx(0.0, abs=1e-12)


def test_single_vehicle_matches_direct_minimiser():
    """Test lane tracking at T = 5 against a derivative-free single-shooting search."""
    bicycle = BicycleDynamics()
    T = 5
    x0 = np.array([0.0, 0.5, 0.0, 5.0])
    reference = np.array([[0.5 * (k + 1), 0.0, 0.0, 5.0] for k in range(T)])
    cost = StageCostModel(Q=np.diag([1.0, 1.0, 1.0, 0.5]), R=np.diag([1.0, 0.1]), reference=reference)

    def objective(flat):
        try:
            return cost.total(rollout(bicycle, x0, flat.reshape(T, 2)))
        except DomainError:
            return 1e12

    direct = minimize(objective, np.zeros(2 * T), method='Powell',
                      options={'xtol': 1e-10, 'ftol': 1e-14, 'maxiter': 200000, 'maxfev': 200000})
    result = solve_agent(cost, bicycle, x0, opts=DdpOptions(tol=1e-12))

    assert result.cost <= direct.fun + 1e-8, f"DDP cost {result.cost} above direct search {direct.fun}"
    assert abs(result.cost - direct.fun) <= 1e-4 * max(1.0, direct.fun)
    assert_allclose(result.trajectory.inputs.ravel(), direct.x, atol=5e-3)


def test_bounds_and_monotone_cost(bicycle):
    """Test clamped inputs, exact dynamics and no cost increase over the initial guess."""
    T = 40
    x0 = np.array([-20.0, -2.0, 0.0, 5.0])
    s = 0.5 * np.arange(1, T + 1)
    reference = np.column_stack([x0[0] + s, -2.0 + 0.05 * s ** 1.5, np.zeros(T), np.full(T, 8.0)])
    cost = StageCostModel(Q=np.diag([1.0, 1.0, 1.0, 0.5]), R=np.diag([1.0, 0.1]), reference=reference)
    bounds = Bounds(np.array([-0.6, -3.0]), np.array([0.6, 3.0]))
    init = initial_trajectory(bicycle, x0, T)

    result = solve_agent(cost, bicycle, x0, bounds, init)
    traj = result.trajectory
    assert result.cost <= cost.total(init)
    assert np.all(traj.inputs >= bounds.u_lower) and np.all(traj.inputs <= bounds.u_upper)
    assert_array_equal(traj.states, bicycle.rollout(x0, traj.inputs))


def test_state_bound_penalty(bicycle):
    """Test the exterior state penalty holds speed near its upper bound."""
    T = 20
    x0 = np.array([0.0, 0.0, 0.0, 5.0])
    reference = np.array([[1.0 * (k + 1), 0.0, 0.0, 10.0] for k in range(T)])
    kwargs = dict(Q=np.diag([0.0, 1.0, 1.0, 1.0]), R=np.diag([1.0, 0.1]), reference=reference)
    free = solve_agent(StageCostModel(**kwargs), bicycle, x0).trajectory
    capped = solve_agent(StageCostModel(
        **kwargs, x_lower=np.full(4, -np.inf), x_upper=np.array([np.inf, np.inf, np.inf, 6.0]),
        state_penalty=1e3,
    ), bicycle, x0).trajectory
    assert free.states[:, 3].max() > 7.0
    assert capped.states[:, 3].max() < 6.2


def test_indefinite_input_hessian(bicycle):
    """Test a non positive definite Q_uu is reported."""
    traj = initial_trajectory(bicycle, np.array([0.0, 0.0, 0.0, 5.0]), 5)
    cost = StageCostModel(Q=np.zeros((4, 4)), R=-np.eye(2), reference=traj.states[1:])
    with pytest.raises(NotPositiveDefinite):
        backward_pass(traj, cost, bicycle, reg=0.0)


def test_trajectory_copy():
    """Test copies do not share buffers."""
    traj = Trajectory(np.zeros((3, 4)), np.zeros((2, 2)))
    dup = traj.copy()
    dup.inputs[0, 0] = 1.0
    assert traj.inputs[0, 0] == 0.0
    assert traj.horizon == 2


def test_warm_start_near_optimum_takes_the_newton_step(integrator):
    """Test a large-cost LQ solve warm-started next to its optimum still lands on it."""
    T, tau = 20, 0.1
    x0 = np.zeros(2)
    t = np.arange(1, T + 1)[:, None]
    reference = np.hstack([30.0 + 2.0 * t, np.full((T, 1), -25.0)])
    cost = StageCostModel(Q=np.eye(2), R=np.eye(2), reference=reference)
    phi = tau * np.kron(np.tril(np.ones((T, T))), np.eye(2))
    e = (reference - x0).ravel()
    u_opt = np.linalg.solve(phi.T @ phi + np.eye(2 * T), phi.T @ e).reshape(T, 2)

    warm = rollout(integrator, x0, u_opt + 3e-3)
    assert cost.total(warm) > 1e3
    result = solve_agent(cost, integrator, x0, init=warm, opts=EXACT)
    assert result.converged
    assert_allclose(result.trajectory.inputs, u_opt, atol=1e-8)
    print("  ✓ warm start next to the optimum: PASSED")
