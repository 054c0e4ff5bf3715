"""
Junction and intersection scenario presets, and assembly of the ADMM problem from a config.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from coopadmm.config.manager import RoadConfig, ScenarioConfig, ScenarioParams, VehicleConfig, validate_config
from coopadmm.core.constants import DEFAULT_D_CMU
from coopadmm.core.exceptions import ConfigError
from coopadmm.core.interfaces import DoubleMatrix
from coopadmm.model.dynamics import BicycleDynamics, VehicleParams
from coopadmm.model.problem import AgentSpec, Bounds, CoopProblem, CostWeights
from coopadmm.model.topology import build_graph
from coopadmm.scenarios.reference import ManeuverPath, initial_state, maneuver_path, sample_reference
from coopadmm.utils.helpers import pairwise_distances

logger = logging.getLogger(__name__)


def junction_config(seed: int = 0) -> ScenarioConfig:
    """Three-way junction: west goes straight, east turns left, south turns right."""
    return ScenarioConfig(
        name="junction",
        layout="junction",
        road=RoadConfig(arms=["east", "west", "south"]),
        params=ScenarioParams(safety_margin=0.05),
        vehicles=[
            VehicleConfig(arm="west", maneuver="straight", start_distance=25.0),
            VehicleConfig(arm="east", maneuver="left", start_distance=20.0),
            VehicleConfig(arm="south", maneuver="right", start_distance=24.0),
        ],
        seed=seed,
    )


def intersection_config(seed: int = 0) -> ScenarioConfig:
    """Four-way intersection with a right, straight and left turner queued on every arm."""
    vehicles = []
    for arm in ("east", "north", "west", "south"):
        for maneuver, distance in (("right", 20.0), ("straight", 28.0), ("left", 36.0)):
            vehicles.append(VehicleConfig(arm=arm, maneuver=maneuver, start_distance=distance))
    return ScenarioConfig(
        name="intersection",
        layout="intersection",
        road=RoadConfig(arms=["east", "north", "west", "south"]),
        params=ScenarioParams(safety_margin=0.02),
        vehicles=vehicles,
        seed=seed,
    )


def preset(layout: str, seed: int = 0) -> ScenarioConfig:
    """Preset config for ``layout``.

    Raises:
        ConfigError: If the layout is unknown
    """
    if layout == "junction":
        return junction_config(seed)
    if layout == "intersection":
        return intersection_config(seed)
    raise ConfigError(f"Unknown layout {layout!r}")


@dataclass
class ScenarioProblem:
    """CoopProblem plus the per-vehicle references and initial states it was built from."""

    problem: CoopProblem
    references: List[DoubleMatrix]
    initial_states: DoubleMatrix
    vehicle_params: VehicleParams


def _vehicle_path(config: ScenarioConfig, k: int) -> Tuple[ManeuverPath, float]:
    road, v = config.road, config.vehicles[k]
    speed = v.speed if v.speed is not None else config.params.speed
    distance = v.start_distance if v.start_distance is not None else road.arm_length
    try:
        path = maneuver_path(v.arm, v.maneuver, distance, road.lane_width, road.turn_radius, v.lane)
    except ConfigError as e:
        raise ConfigError(f"vehicles[{k}]: {e.message}", details={'vehicle': k, **e.details})
    return path, speed


def generate_reference(config: ScenarioConfig) -> List[DoubleMatrix]:
    """(T, 4) state reference x_1..x_T of every vehicle, sampled at its nominal speed.

    Raises:
        ConfigError: If a maneuver does not fit the road or the horizon
    """
    p = config.params
    references = []
    for k in range(len(config.vehicles)):
        path, speed = _vehicle_path(config, k)
        try:
            references.append(sample_reference(path, speed, p.T, p.tau_s))
        except ConfigError as e:
            raise ConfigError(f"vehicles[{k}]: {e.message}", details={'vehicle': k, **e.details})
    return references


def build_problem(config: ScenarioConfig, seed: Optional[int] = None) -> ScenarioProblem:
    """Assemble references, agents and the constraint graph.

    Args:
        config: Validated scenario
        seed: Seed of the initial-position jitter; config.seed when omitted

    Returns:
        ScenarioProblem

    Raises:
        ConfigError: If a maneuver does not fit the road or the horizon
    """
    p = config.params
    seed = config.seed if seed is None else seed
    vp = VehicleParams(b=p.wheelbase, tau_s=p.tau_s, length=p.length, width=p.width)
    dynamics = BicycleDynamics(vp)
    rng = np.random.default_rng(seed)

    u_bound = np.array([p.steer_bound, p.accel_bound])
    x_lower = np.array(p.state_lower, dtype=float) if p.state_lower is not None else None
    x_upper = np.array(p.state_upper, dtype=float) if p.state_upper is not None else None
    Q = np.diag(np.asarray(p.Q, dtype=float))
    R = np.diag(np.asarray(p.R, dtype=float))

    references = generate_reference(config)
    agents, starts = [], []
    for k, (v, reference) in enumerate(zip(config.vehicles, references)):
        if v.initial_state is not None:
            x0 = np.array(v.initial_state, dtype=float)
        else:
            x0 = initial_state(*_vehicle_path(config, k))
        if p.initial_jitter > 0:
            x0[:2] += rng.normal(scale=p.initial_jitter, size=2)
        agents.append(AgentSpec(
            dynamics=dynamics, x0=x0, weights=CostWeights(Q=Q, R=R, reference=reference),
            bounds=Bounds(-u_bound, u_bound, x_lower, x_upper),
        ))
        starts.append(x0)

    starts = np.array(starts)
    d_cmu = p.d_cmu if p.d_cmu is not None else DEFAULT_D_CMU
    graph = build_graph(starts[:, :2], p.d_safe, d_cmu)
    problem = CoopProblem(agents=agents, T=p.T, d_safe=p.d_safe, graph=graph)
    return ScenarioProblem(problem=problem, references=references, initial_states=starts, vehicle_params=vp)


def validate_scenario(config: ScenarioConfig, seed: Optional[int] = None) -> ScenarioProblem:
    """Full invariant check: schema, geometry, horizon fit and initial separation.

    Raises:
        ConfigError: If any check fails
    """
    validate_config(config)
    built = build_problem(config, seed)
    dist = pairwise_distances(built.initial_states[:, :2])
    close = np.argwhere(np.triu(dist < config.params.d_safe, k=1))
    if close.size:
        i, j = (int(v) for v in close[0])
        raise ConfigError(
            f"Vehicles {i} and {j} start {dist[i, j]:.3f} m apart, closer than d_safe={config.params.d_safe}",
            details={'pairs': [tuple(int(v) for v in row) for row in close]},
        )
    return built
