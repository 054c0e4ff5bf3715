"""
Scenario configuration: strict JSON schema, validation, load and save.
"""

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from coopadmm.core.base_service import BaseService
from coopadmm.core.constants import (
    BACKENDS, DEFAULT_ACCEL_BOUND, DEFAULT_ADMM_MAX_ITER, DEFAULT_ARM_LENGTH, DEFAULT_D_SAFE,
    DEFAULT_DDP_MAX_ITER, DEFAULT_EPS, DEFAULT_HORIZON, DEFAULT_LANE_WIDTH, DEFAULT_SIGMA, DEFAULT_SPEED,
    DEFAULT_STEER_BOUND, DEFAULT_TAU_S, DEFAULT_TURN_RADIUS, DEFAULT_VEHICLE_LENGTH, DEFAULT_VEHICLE_WIDTH,
    DEFAULT_WHEELBASE, LAYOUTS, MANEUVERS,
)
from coopadmm.core.error_handler import get_error_details
from coopadmm.core.exceptions import ConfigError
from coopadmm.scenarios.reference import ARM_DIRECTIONS, exit_arm


def _strict(cls, data: Any, where: str):
    """Build dataclass ``cls`` from a mapping, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown keys in {where}: {', '.join(unknown)}", details={'keys': unknown})
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigError(f"Incomplete {where}: {e}")


def _positive(value: Any, name: str) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0 or not math.isfinite(value):
        raise ConfigError(f"{name} must be a positive finite number, got {value!r}")


@dataclass
class RoadConfig:
    lane_width: float = DEFAULT_LANE_WIDTH
    arm_length: float = DEFAULT_ARM_LENGTH
    turn_radius: float = DEFAULT_TURN_RADIUS
    arms: List[str] = field(default_factory=lambda: list(ARM_DIRECTIONS))


@dataclass
class ScenarioParams:
    d_safe: float = DEFAULT_D_SAFE
    d_cmu: Optional[float] = None
    tau_s: float = DEFAULT_TAU_S
    T: int = DEFAULT_HORIZON
    sigma: float = DEFAULT_SIGMA
    eps: float = DEFAULT_EPS
    max_admm_iterations: int = DEFAULT_ADMM_MAX_ITER
    max_ddp_iterations: int = DEFAULT_DDP_MAX_ITER
    steer_bound: float = DEFAULT_STEER_BOUND
    accel_bound: float = DEFAULT_ACCEL_BOUND
    length: float = DEFAULT_VEHICLE_LENGTH
    width: float = DEFAULT_VEHICLE_WIDTH
    wheelbase: float = DEFAULT_WHEELBASE
    speed: float = DEFAULT_SPEED
    Q: List[float] = field(default_factory=lambda: [1.0, 1.0, 1.0, 0.5])
    R: List[float] = field(default_factory=lambda: [1.0, 0.1])
    safety_margin: float = 0.0
    initial_jitter: float = 0.0
    state_lower: Optional[List[float]] = None
    state_upper: Optional[List[float]] = None


@dataclass
class VehicleConfig:
    arm: str
    maneuver: str
    lane: int = 0
    start_distance: Optional[float] = None
    speed: Optional[float] = None
    initial_state: Optional[List[float]] = None


@dataclass
class ScenarioConfig:
    name: str
    layout: str
    road: RoadConfig = field(default_factory=RoadConfig)
    params: ScenarioParams = field(default_factory=ScenarioParams)
    vehicles: List[VehicleConfig] = field(default_factory=list)
    backend: str = "sdr"
    seed: int = 0

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioConfig":
        """Parse a JSON-decoded mapping.

        Raises:
            ConfigError: On unknown keys or invalid values
        """
        if not isinstance(data, dict):
            raise ConfigError("Scenario document must be a JSON object")
        body = dict(data)
        road = _strict(RoadConfig, body.pop('road', {}), "road")
        params = _strict(ScenarioParams, body.pop('params', {}), "params")
        raw_vehicles = body.pop('vehicles', [])
        if not isinstance(raw_vehicles, list):
            raise ConfigError("vehicles must be a list")
        vehicles = [_strict(VehicleConfig, v, f"vehicles[{k}]") for k, v in enumerate(raw_vehicles)]
        config = _strict(cls, dict(body, road=road, params=params, vehicles=vehicles), "scenario")
        validate_config(config)
        return config

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def validate_config(config: ScenarioConfig) -> None:
    """Check parameter ranges and maneuver geometry.

    Raises:
        ConfigError: If any check fails
    """
    if not isinstance(config.name, str) or not config.name:
        raise ConfigError("Scenario name must be a non-empty string")
    if config.layout not in LAYOUTS:
        raise ConfigError(f"layout must be one of {LAYOUTS}, got {config.layout!r}")
    if config.backend not in BACKENDS:
        raise ConfigError(f"backend must be one of {BACKENDS}, got {config.backend!r}")
    if isinstance(config.seed, bool) or not isinstance(config.seed, int) or config.seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {config.seed!r}")

    road, p = config.road, config.params
    for name in ('lane_width', 'arm_length', 'turn_radius'):
        _positive(getattr(road, name), f"road.{name}")
    for arm in road.arms:
        if arm not in ARM_DIRECTIONS:
            raise ConfigError(f"Unknown arm {arm!r} in road.arms")

    for name in ('d_safe', 'tau_s', 'sigma', 'eps', 'steer_bound', 'accel_bound', 'length', 'width',
                 'wheelbase', 'speed'):
        _positive(getattr(p, name), f"params.{name}")
    for name in ('T', 'max_admm_iterations', 'max_ddp_iterations'):
        value = getattr(p, name)
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise ConfigError(f"params.{name} must be a positive integer, got {value!r}")
    if p.d_cmu is not None:
        _positive(p.d_cmu, "params.d_cmu")
        if p.d_safe > p.d_cmu:
            raise ConfigError(f"params.d_safe={p.d_safe} exceeds params.d_cmu={p.d_cmu}")
    if p.safety_margin < 0 or p.initial_jitter < 0:
        raise ConfigError("params.safety_margin and params.initial_jitter must be nonnegative")
    if len(p.Q) != 4 or any(q < 0 for q in p.Q):
        raise ConfigError("params.Q must list 4 nonnegative diagonal weights")
    if len(p.R) != 2 or any(r <= 0 for r in p.R):
        raise ConfigError("params.R must list 2 positive diagonal weights")
    if (p.state_lower is None) != (p.state_upper is None):
        raise ConfigError("params.state_lower and params.state_upper must be given together")
    if p.state_lower is not None:
        if len(p.state_lower) != 4 or len(p.state_upper) != 4:
            raise ConfigError("State bounds must have 4 entries")
        if any(lo > hi for lo, hi in zip(p.state_lower, p.state_upper)):
            raise ConfigError("params.state_lower must not exceed params.state_upper")

    if not config.vehicles:
        raise ConfigError("Scenario needs at least one vehicle")
    for k, v in enumerate(config.vehicles):
        if v.maneuver not in MANEUVERS:
            raise ConfigError(f"vehicles[{k}].maneuver must be one of {MANEUVERS}, got {v.maneuver!r}")
        if v.arm not in road.arms:
            raise ConfigError(f"vehicles[{k}].arm {v.arm!r} is not an arm of this road")
        out = exit_arm(v.arm, v.maneuver)
        if out not in road.arms:
            raise ConfigError(f"vehicles[{k}] {v.maneuver} from {v.arm} exits by missing arm {out!r}")
        if isinstance(v.lane, bool) or not isinstance(v.lane, int) or v.lane < 0:
            raise ConfigError(f"vehicles[{k}].lane must be a nonnegative integer")
        if v.start_distance is not None:
            _positive(v.start_distance, f"vehicles[{k}].start_distance")
        if v.speed is not None:
            _positive(v.speed, f"vehicles[{k}].speed")
        if v.initial_state is not None and len(v.initial_state) != 4:
            raise ConfigError(f"vehicles[{k}].initial_state must have 4 entries")


class ConfigManager(BaseService):
    """Loads and saves scenario JSON documents."""

    def __init__(self, config_file: str | os.PathLike):
        BaseService.__init__(self)
        self.config_file = Path(config_file).resolve()

    def load_config(self) -> ScenarioConfig:
        """Load and validate the scenario file.

        Returns:
            ScenarioConfig

        Raises:
            ConfigError: If the file is missing, unreadable, not JSON or invalid
        """
        if not self.config_file.exists():
            raise ConfigError(f"Scenario file not found: {self.config_file}", details={'path': str(self.config_file)})
        try:
            with open(self.config_file, 'r', encoding='utf-8') as fh:
                data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in {self.config_file}: {e}", details={'path': str(self.config_file)})
        except OSError as e:
            raise ConfigError(f"Cannot read {self.config_file}: {e}", details={'path': str(self.config_file)})
        config = ScenarioConfig.from_dict(data)
        self.log_info(f"Loaded scenario {config.name!r} with {len(config.vehicles)} vehicles from {self.config_file}")
        return config

    def save_config(self, config: ScenarioConfig) -> bool:
        """Validate and write a scenario file.

        Returns:
            True on success

        Raises:
            ConfigError: If validation or writing fails
        """
        validate_config(config)
        try:
            self.config_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self.config_file, 'w', encoding='utf-8') as fh:
                json.dump(config.to_dict(), fh, indent=2)
                fh.write("\n")
        except OSError as e:
            error_details = get_error_details(e)
            self.log_error(f"Failed to save scenario: {e}")
            raise ConfigError(f"Failed to save scenario: {e}", error_code="CFG002", details=error_details)
        self.log_info(f"Saved scenario {config.name!r} to {self.config_file}")
        return True

    def reset_to_defaults(self, layout: str = "junction") -> ScenarioConfig:
        """Write the preset of ``layout`` to the managed file and return it."""
        from coopadmm.scenarios.presets import preset

        config = preset(layout)
        self.save_config(config)
        return config

    def get_config_path(self) -> Path:
        return self.config_file
