"""
Reference trajectories through a junction centred at the origin.

Arms point outward along east, north, west and south. Traffic keeps right: an inbound
lane lies lane_width/2 (plus whole lanes for lane > 0) to the right of the travel
direction. Turns are circular fillets between the entry and exit lane lines.
"""

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from coopadmm.core.constants import (
    DEFAULT_LANE_WIDTH, DEFAULT_SPEED, DEFAULT_TAU_S, DEFAULT_TURN_RADIUS,
)
from coopadmm.core.exceptions import ConfigError
from coopadmm.core.interfaces import DoubleMatrix

ARM_DIRECTIONS: Dict[str, Tuple[float, float]] = {
    "east": (1.0, 0.0),
    "north": (0.0, 1.0),
    "west": (-1.0, 0.0),
    "south": (0.0, -1.0),
}

# heading of inbound traffic on each arm, radians
INBOUND_HEADINGS: Dict[str, float] = {
    "east": math.pi,
    "north": -0.5 * math.pi,
    "west": 0.0,
    "south": 0.5 * math.pi,
}


def _right_of(h: np.ndarray) -> np.ndarray:
    return np.array([h[1], -h[0]])


def _left_of(h: np.ndarray) -> np.ndarray:
    return np.array([-h[1], h[0]])


def arm_for_direction(h: np.ndarray) -> str:
    for name, direction in ARM_DIRECTIONS.items():
        if np.allclose(h, direction):
            return name
    raise ConfigError(f"Direction {h} is not along an arm")


def exit_arm(entry: str, maneuver: str) -> str:
    """Arm a maneuver leaves by.

    Raises:
        ConfigError: On an unknown arm or maneuver
    """
    if entry not in ARM_DIRECTIONS:
        raise ConfigError(f"Unknown arm {entry!r}")
    heading = -np.array(ARM_DIRECTIONS[entry])
    if maneuver == "straight":
        out = heading
    elif maneuver == "left":
        out = _left_of(heading)
    elif maneuver == "right":
        out = _right_of(heading)
    else:
        raise ConfigError(f"Unknown maneuver {maneuver!r}")
    return arm_for_direction(out)


@dataclass(frozen=True)
class ManeuverPath:
    """Arc-length parameterised path: entry straight, optional fillet arc, unbounded exit straight."""

    start: np.ndarray
    heading_in: np.ndarray
    entry_length: float
    radius: float
    turn: int
    theta_in: float

    @property
    def arc_length(self) -> float:
        return 0.5 * math.pi * self.radius if self.turn else 0.0

    @property
    def turn_end(self) -> float:
        return self.entry_length + self.arc_length

    def sample(self, s: float) -> Tuple[float, float, float]:
        """(p_x, p_y, theta) at arc length s from the start."""
        h = self.heading_in
        if not self.turn or s <= self.entry_length:
            p = self.start + s * h
            return float(p[0]), float(p[1]), self.theta_in
        normal = _left_of(h) if self.turn > 0 else _right_of(h)
        tangent_point = self.start + self.entry_length * h
        centre = tangent_point + self.radius * normal
        if s <= self.turn_end:
            phi = (s - self.entry_length) / self.radius
            p = centre - self.radius * normal * math.cos(phi) + self.radius * h * math.sin(phi)
            return float(p[0]), float(p[1]), self.theta_in + self.turn * phi
        h_out = normal
        exit_point = centre + self.radius * h
        p = exit_point + (s - self.turn_end) * h_out
        return float(p[0]), float(p[1]), self.theta_in + self.turn * 0.5 * math.pi


def maneuver_path(arm: str, maneuver: str, start_distance: float, lane_width: float = DEFAULT_LANE_WIDTH,
                  turn_radius: float = DEFAULT_TURN_RADIUS, lane: int = 0) -> ManeuverPath:
    """Path of a vehicle entering from ``arm`` at ``start_distance`` from the centre.

    Raises:
        ConfigError: If the entry straight would have negative length
    """
    if arm not in ARM_DIRECTIONS:
        raise ConfigError(f"Unknown arm {arm!r}")
    if lane < 0:
        raise ConfigError(f"Lane id must be nonnegative, got {lane}")
    if turn_radius <= 0 or lane_width <= 0:
        raise ConfigError("Turn radius and lane width must be positive")
    h = -np.array(ARM_DIRECTIONS[arm])
    offset = (0.5 + lane) * lane_width
    start = start_distance * np.array(ARM_DIRECTIONS[arm]) + offset * _right_of(h)
    theta_in = INBOUND_HEADINGS[arm]
    turn = {"straight": 0, "left": 1, "right": -1}.get(maneuver)
    if turn is None:
        raise ConfigError(f"Unknown maneuver {maneuver!r}")
    if turn == 0:
        return ManeuverPath(start, h, float('inf'), turn_radius, 0, theta_in)

    h_out = _left_of(h) if turn > 0 else _right_of(h)
    exit_offset = (0.5 + lane) * lane_width * _right_of(h_out)
    # corner where the entry lane line meets the exit lane line
    along = float(np.dot(exit_offset - start, h))
    entry_length = along - turn_radius
    if entry_length < 0:
        raise ConfigError(
            f"Vehicle on arm {arm} starts too close to turn with radius {turn_radius}",
            details={'arm': arm, 'maneuver': maneuver, 'start_distance': start_distance},
        )
    return ManeuverPath(start, h, entry_length, turn_radius, turn, theta_in)


def sample_reference(path: ManeuverPath, speed: float, T: int, tau_s: float = DEFAULT_TAU_S) -> DoubleMatrix:
    """Constant-speed reference states for steps 1..T.

    Raises:
        ConfigError: If a turn does not complete within the horizon
    """
    if speed <= 0:
        raise ConfigError(f"Reference speed must be positive, got {speed}")
    travel = speed * tau_s * T
    if path.turn and path.turn_end > travel:
        raise ConfigError(
            f"Turn completes after {path.turn_end:.2f} m but the horizon covers {travel:.2f} m",
            details={'turn_end': path.turn_end, 'travel': travel},
        )
    ref = np.empty((T, 4))
    for k in range(1, T + 1):
        ref[k - 1, :3] = path.sample(speed * tau_s * k)
        ref[k - 1, 3] = speed
    return ref


def initial_state(path: ManeuverPath, speed: float) -> DoubleMatrix:
    """State at the path start moving at ``speed``."""
    return np.array([path.start[0], path.start[1], path.theta_in, speed])
