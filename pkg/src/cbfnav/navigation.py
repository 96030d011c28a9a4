"""Nominal waypoint tracking (no obstacle awareness)."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .dynamics import ControlInput, RobotState, wrap_angle


@dataclass(frozen=True)
class NominalGains:
    k1: float = 1.0
    k2: float = 1.0
    v_des: float = 0.5

    def __post_init__(self) -> None:
        if not (self.k1 > 0 and self.k2 > 0 and self.v_des > 0):
            raise ValueError(f"nominal gains must be positive: {self}")


@dataclass(frozen=True)
class WaypointPlan:
    """Ordered goals; ``active_index == len(waypoints)`` means finished.

    The last waypoint uses ``goal_tolerance``, the intermediate ones
    ``reach_tolerance``.
    """

    waypoints: tuple[tuple[float, float], ...]
    reach_tolerance: float = 0.15
    goal_tolerance: float = 0.05
    active_index: int = 0

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ValueError("waypoint plan is empty")
        if not (0 <= self.active_index <= len(self.waypoints)):
            raise ValueError(f"active_index {self.active_index} out of range")
        object.__setattr__(
            self, "waypoints", tuple((float(x), float(y)) for x, y in self.waypoints)
        )

    @property
    def complete(self) -> bool:
        return self.active_index >= len(self.waypoints)

    @property
    def active(self) -> tuple[float, float]:
        # a finished plan keeps pointing at its final goal
        return self.waypoints[min(self.active_index, len(self.waypoints) - 1)]

    def tolerance(self, index: int) -> float:
        return self.goal_tolerance if index == len(self.waypoints) - 1 else self.reach_tolerance


def nominal_control(state: RobotState, goal, gains: NominalGains) -> ControlInput:
    """Speed regulation plus proportional heading pursuit of ``goal``.

    Output is unclipped; bounds are applied downstream.
    """
    dx = goal[0] - state.x
    dy = goal[1] - state.y
    if dx == 0.0 and dy == 0.0:
        raise ValueError("goal coincides with robot position")
    theta_des = math.atan2(dy, dx)
    a = -gains.k1 * (state.v - gains.v_des)
    omega = -gains.k2 * wrap_angle(state.theta - theta_des)
    return ControlInput(a, omega)


def advance_waypoint(plan: WaypointPlan, state: RobotState) -> WaypointPlan:
    if plan.complete:
        return plan
    gx, gy = plan.waypoints[plan.active_index]
    if math.hypot(state.x - gx, state.y - gy) <= plan.tolerance(plan.active_index):
        return replace(plan, active_index=plan.active_index + 1)
    return plan
