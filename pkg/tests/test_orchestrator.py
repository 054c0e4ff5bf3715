"""
Tests for the ADMM loop, its dual update and the worker pool.
"""

from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from coopadmm.admm.orchestrator import (
    AdmmOptions, AdmmOrchestrator, RunStatus, admm_step, consensus_residual, initial_state, run, update_dual,
)
from coopadmm.admm.workers import WorkerPool, resolve_threads
from coopadmm.core.constants import THREADS_ENV_VAR
from coopadmm.core.exceptions import ConfigError
from coopadmm.core.logger import ProgressRecorder
from coopadmm.model.dynamics import BicycleDynamics
from coopadmm.model.layout import pack_agent, select_T
from coopadmm.model.problem import AgentSpec, Bounds, CoopProblem, CostWeights
from coopadmm.solvers.ddp import DdpOptions, initial_trajectory

EXACT = DdpOptions(reg_init=0.0, reg_min=0.0)


def _single_bicycle_problem(x0, T=20):
    dyn = BicycleDynamics()
    reference = initial_trajectory(dyn, x0, T).states[1:]
    agent = AgentSpec(dynamics=dyn, x0=x0, weights=CostWeights(Q=np.eye(4), R=np.eye(2), reference=reference),
                      bounds=Bounds(np.array([-0.6, -3.0]), np.array([0.6, 3.0])))
    return CoopProblem(agents=[agent], T=T)


def test_dual_update_arithmetic():
    """Test lambda + sigma (T y - z) on unit vectors."""
    e1 = np.array([1.0, 0.0, 0.0])
    assert_array_equal(update_dual(np.zeros(3), 10.0, e1, np.zeros(3)), [10.0, 0.0, 0.0])
    assert_array_equal(update_dual(np.ones(3), 2.0, e1, e1), np.ones(3))


def test_consensus_fixed_point():
    """Test a consistent, reachable start is left unchanged by one iteration."""
    problem = _single_bicycle_problem(np.array([0.0, 0.0, 0.2, 5.0]))
    opts = AdmmOptions(threads=1)
    state = initial_state(problem, opts)
    state = replace(state, z=select_T(problem.layout, state.y))
    assert consensus_residual(problem, state) == 0.0

    after = admm_step(state, problem, opts)
    assert after.k == 1
    assert_allclose(after.lam, 0.0, atol=1e-12)
    assert after.residual == pytest.approx(0.0, abs=1e-12)
    assert_allclose(after.y, state.y, atol=1e-12)


def test_unconstrained_agents_reach_least_squares_optimum(make_integrator_problem):
    """Test repeated iterations without coupling converge to each agent's own LQ optimum."""
    T, tau = 10, 0.1
    starts = [(0.0, 0.0), (5.0, 1.0)]
    t = np.arange(1, T + 1)[:, None]
    references = [np.hstack([0.5 * t, 0.2 * t]), np.hstack([5.0 - 0.3 * t, 1.0 + 0.1 * t ** 1.5])]
    problem = make_integrator_problem(starts, references, pairs=False)
    opts = AdmmOptions(sigma=1.0, ddp=EXACT, threads=1)

    orchestrator = AdmmOrchestrator(problem, opts)
    state = orchestrator.initial_state()
    with WorkerPool(1) as pool:
        for _ in range(50):
            state = orchestrator.admm_step(state, pool)

    phi = tau * np.kron(np.tril(np.ones((T, T))), np.eye(2))
    for i, (x0, ref) in enumerate(zip(starts, references)):
        e = (ref - np.asarray(x0)).ravel()
        u_opt = np.linalg.solve(phi.T @ phi + np.eye(2 * T), phi.T @ e).reshape(T, 2)
        assert_allclose(state.trajectories[i].inputs, u_opt, atol=1e-4, err_msg=f"agent {i}")
    print("  ✓ proximal iteration matches the least-squares optimum: PASSED")


def test_single_vehicle_converges_quickly():
    """Test a lone vehicle has nothing to negotiate."""
    problem = _single_bicycle_problem(np.array([0.0, 0.0, 0.0, 4.0]))
    result = run(problem, AdmmOptions(threads=1))
    assert result.converged
    assert result.iterations <= 2
    assert result.status is RunStatus.CONVERGED


def test_run_records_progress_and_histories(head_on_problem):
    """Test sink records, history shapes and dynamically consistent trajectories."""
    recorder = ProgressRecorder()
    opts = AdmmOptions(max_iterations=4, threads=1)
    result = AdmmOrchestrator(head_on_problem, opts, sink=recorder).run()
    k = result.iterations
    records = recorder.records()

    assert 1 <= k <= 4
    assert [r['iteration'] for r in records] == list(range(1, k + 1))
    assert set(records[0]) == {'iteration', 'residual', 'dual_residual', 'y_step_ms', 'z_step_ms'}
    assert result.history_states.shape == (k + 1, 2, head_on_problem.T + 1, 2)
    assert result.history_inputs.shape == (k + 1, 2, head_on_problem.T, 2)
    assert len(result.state.residuals) == result.state.k
    if not result.converged:
        assert result.state.residual == min(r['residual'] for r in records)

    for agent, traj in zip(head_on_problem.agents, result.trajectories):
        assert_allclose(traj.states, agent.dynamics.rollout(agent.x0, traj.inputs), atol=1e-12)
        assert np.all(np.abs(traj.inputs) <= 8.0)


def test_run_reports_every_iteration_even_when_best_is_earlier(head_on_problem):
    """Test residual and timing histories span all iterations, not only up to the best iterate."""
    recorder = ProgressRecorder()
    result = AdmmOrchestrator(head_on_problem, AdmmOptions(max_iterations=4, threads=1), sink=recorder).run()
    records = recorder.records()

    assert len(result.residuals) == result.iterations, "residual history truncated"
    assert len(result.dual_residuals) == result.iterations
    assert len(result.y_step_ms) == result.iterations
    assert len(result.z_step_ms) == result.iterations
    assert result.residuals == [r['residual'] for r in records]
    assert result.state.k <= result.iterations
    print("  ✓ full residual history: PASSED")


def test_thread_count_does_not_change_results(head_on_problem):
    """Test one worker and four workers give identical iterates."""
    serial = run(head_on_problem, AdmmOptions(max_iterations=3, threads=1, seed=5))
    parallel = run(head_on_problem, AdmmOptions(max_iterations=3, threads=4, seed=5))
    assert serial.iterations == parallel.iterations
    assert_array_equal(serial.history_states, parallel.history_states)
    assert_array_equal(serial.state.z, parallel.state.z)
    assert serial.state.residuals == parallel.state.residuals


def test_initial_state(head_on_problem):
    """Test y from zero-input rollouts and zero z and lambda."""
    state = initial_state(head_on_problem)
    layout = head_on_problem.layout
    assert state.k == 0
    assert_array_equal(state.z, np.zeros(layout.z_size))
    assert_array_equal(state.lam, np.zeros(layout.z_size))
    first = head_on_problem.agents[0]
    expected = pack_agent(layout, np.tile(first.x0, (layout.T + 1, 1)), np.zeros((layout.T, 2)))
    assert_array_equal(state.y[layout.agent_y(0)], expected)
    assert state.residual == float('inf')


def test_invalid_options():
    """Test option validation."""
    with pytest.raises(ConfigError):
        AdmmOptions(sigma=0.0)
    with pytest.raises(ConfigError):
        AdmmOptions(eps=-1.0)
    with pytest.raises(ConfigError):
        AdmmOptions(max_iterations=0)
    with pytest.raises(ConfigError):
        AdmmOptions(safety_margin=-0.1)


def test_resolve_threads(monkeypatch):
    """Test explicit counts, the environment override and its validation."""
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    assert resolve_threads(3) == 3
    assert resolve_threads(None) >= 1
    monkeypatch.setenv(THREADS_ENV_VAR, "2")
    assert resolve_threads(None) == 2
    assert resolve_threads(5) == 5
    monkeypatch.setenv(THREADS_ENV_VAR, "many")
    with pytest.raises(ConfigError):
        resolve_threads(0)


def test_pool_keeps_order_and_raises_first_failure():
    """Test ordered results and the first failure in index order."""
    with WorkerPool(4) as pool:
        assert pool.map_ordered(lambda x: x * x, range(10)) == [x * x for x in range(10)]

        def fail(x):
            if x >= 3:
                raise ValueError(f"item {x}")
            return x

        with pytest.raises(ValueError, match="item 3"):
            pool.map_ordered(fail, range(8))
