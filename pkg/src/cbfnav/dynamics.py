"""Augmented unicycle kinematics.

State is ``[x, y, v, theta]`` with forward speed promoted to a state and
acceleration as the input:

    x' = v cos(theta),  y' = v sin(theta),  v' = a,  theta' = omega
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    v: float
    theta: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(f) for f in (self.x, self.y, self.v, self.theta)):
            raise ValueError(f"non-finite robot state: {self}")
        # keep the stored heading on [-pi, pi)
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.v, self.theta])


@dataclass(frozen=True)
class ControlInput:
    a: float
    omega: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.omega)):
            raise ValueError(f"non-finite control: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.omega])

    def clipped(self, a_max: float, omega_max: float) -> "ControlInput":
        return ControlInput(
            float(np.clip(self.a, -a_max, a_max)),
            float(np.clip(self.omega, -omega_max, omega_max)),
        )


def wrap_angle(angle: float) -> float:
    """Map an angle onto [-pi, pi)."""
    if not math.isfinite(angle):
        raise ValueError(f"cannot wrap non-finite angle {angle!r}")
    wrapped = (angle + math.pi) % (2.0 * math.pi) - math.pi
    # float modulo can land exactly on +pi for inputs just below -pi
    if wrapped >= math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped


def state_derivative(state: RobotState, u: ControlInput) -> np.ndarray:
    return np.array(
        [
            state.v * math.cos(state.theta),
            state.v * math.sin(state.theta),
            u.a,
            u.omega,
        ]
    )


def step(state: RobotState, u: ControlInput, dt: float) -> RobotState:
    """Advance one explicit Euler step."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    c, s = math.cos(state.theta), math.sin(state.theta)
    return RobotState(
        x=state.x + dt * state.v * c,
        y=state.y + dt * state.v * s,
        v=state.v + dt * u.a,
        theta=state.theta + dt * u.omega,
    )
