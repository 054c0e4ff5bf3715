"""
Shared fixtures for the coopadmm test suite.
"""

import os
import sys

import numpy as np
import pytest

# Add src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from coopadmm.model.dynamics import BicycleDynamics, LinearDynamics, VehicleParams  # noqa: E402
from coopadmm.model.problem import AgentSpec, Bounds, CoopProblem, CostWeights  # noqa: E402
from coopadmm.model.topology import build_graph  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full scenario reproductions")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def params():
    return VehicleParams()


@pytest.fixture
def bicycle(params):
    return BicycleDynamics(params)


def single_integrator(tau: float = 0.1) -> LinearDynamics:
    """Planar point mass: position += tau * velocity input."""
    return LinearDynamics(np.eye(2), tau * np.eye(2), n_p=2)


def integrator_problem(starts, references, Q=None, R=None, d_safe=3.0, pairs=True, bound=None):
    """Single-integrator agents with the given (2,) starts and (T, 2) references."""
    Q = np.eye(2) if Q is None else Q
    R = np.eye(2) if R is None else R
    dyn = single_integrator()
    bounds = Bounds.unbounded(2) if bound is None else Bounds(-bound * np.ones(2), bound * np.ones(2))
    agents = [AgentSpec(dynamics=dyn, x0=np.asarray(x0, dtype=float),
                        weights=CostWeights(Q=Q, R=R, reference=np.asarray(ref, dtype=float)), bounds=bounds)
              for x0, ref in zip(starts, references)]
    graph = build_graph(np.asarray(starts, dtype=float), d_safe) if pairs else None
    return CoopProblem(agents=agents, T=len(references[0]), d_safe=d_safe, graph=graph)


@pytest.fixture
def head_on_problem():
    """Two point masses driving at each other along the x axis."""
    T = 12
    t = np.arange(1, T + 1)[:, None]
    ref_a = np.hstack([-4.0 + 0.6 * t, np.zeros((T, 1))])
    ref_b = np.hstack([4.0 - 0.6 * t, np.zeros((T, 1))])
    return integrator_problem([(-4.0, 0.0), (4.0, 0.0)], [ref_a, ref_b], R=0.1 * np.eye(2), bound=8.0)


@pytest.fixture
def make_integrator_problem():
    return integrator_problem


@pytest.fixture
def integrator():
    return single_integrator()
