"""
Tests for weights, bounds and the coupled problem container.
"""

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from coopadmm.core.exceptions import ConfigError
from coopadmm.model.problem import AgentSpec, Bounds, CoopProblem, CostWeights


def test_cost_weights_validation():
    """Test definiteness checks on Q and R."""
    ref = np.zeros((5, 2))
    CostWeights(Q=np.zeros((2, 2)), R=np.eye(2), reference=ref)
    with pytest.raises(ConfigError):
        CostWeights(Q=-np.eye(2), R=np.eye(2), reference=ref)
    with pytest.raises(ConfigError):
        CostWeights(Q=np.eye(2), R=np.diag([1.0, 0.0]), reference=ref)
    with pytest.raises(ConfigError):
        CostWeights(Q=np.array([[1.0, 2.0], [0.0, 1.0]]), R=np.eye(2), reference=ref)
    with pytest.raises(ConfigError):
        CostWeights(Q=np.eye(2), R=np.eye(2), reference=np.zeros((5, 3)))


def test_bounds():
    """Test ordering checks and clamping."""
    b = Bounds(np.array([-0.6, -3.0]), np.array([0.6, 3.0]))
    assert_array_equal(b.clamp_inputs(np.array([5.0, -1.0])), [0.6, -1.0])
    assert not b.has_state_bounds
    with pytest.raises(ConfigError):
        Bounds(np.array([1.0]), np.array([0.0]))
    with pytest.raises(ConfigError):
        Bounds(np.zeros(2), np.ones(2), x_lower=np.zeros(4))
    free = Bounds.unbounded(2)
    assert_array_equal(free.clamp_inputs(np.array([1e9, -1e9])), [1e9, -1e9])


def test_problem_layout_and_bounds(integrator):
    """Test the derived layout and stacked input bounds."""
    weights = CostWeights(Q=np.eye(2), R=np.eye(2), reference=np.zeros((4, 2)))
    agents = [
        AgentSpec(integrator, np.zeros(2), weights, Bounds(-np.ones(2), np.ones(2))),
        AgentSpec(integrator, np.array([5.0, 0.0]), weights, Bounds(-2 * np.ones(2), 2 * np.ones(2))),
    ]
    problem = CoopProblem(agents=agents, T=4)
    assert (problem.layout.N, problem.layout.T, problem.layout.n, problem.layout.m) == (2, 4, 2, 2)
    assert problem.pairs == []
    lower, upper = problem.input_bounds_stacked()
    assert lower.shape == (4, 4)
    assert_array_equal(upper[0], [1, 1, 2, 2])
    assert_array_equal(problem.initial_positions(), [[0, 0], [5, 0]])

    with pytest.raises(ConfigError):
        CoopProblem(agents=agents, T=5)
    with pytest.raises(ConfigError):
        CoopProblem(agents=[], T=4)
    with pytest.raises(ConfigError):
        AgentSpec(integrator, np.zeros(3), weights, Bounds.unbounded(2))

