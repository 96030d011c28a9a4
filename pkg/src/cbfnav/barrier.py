"""Circular and goal-aligned elliptical barriers with a backstepping step.

Both shapes are quadratics ``h1(p) = d^T Q d - 1`` with ``d = p - c``:

* circle of radius r:              Q = I / r^2
* ellipse (a, b) rotated by phi:   Q = R(phi) diag(1/a^2, 1/b^2) R(phi)^T

so the gradient is ``2 Q d`` and the Hessian is the constant ``2 Q``.
Circles keep their own closed form rather than going through the rotated
ellipse, so the two can be checked against each other. The backstepped
barrier adds the drift derivative of ``h1``:

    h2 = c1 h1 + v (dh1/dx cos(theta) + dh1/dy sin(theta))
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .dynamics import RobotState, wrap_angle


@dataclass(frozen=True)
class Circle:
    pass


@dataclass(frozen=True)
class Ellipse:
    aspect: float = 1.8

    def __post_init__(self) -> None:
        if not self.aspect >= 1.0:
            raise ValueError(f"ellipse aspect must be >= 1, got {self.aspect}")


Shape = Union[Circle, Ellipse]


@dataclass(frozen=True)
class Obstacle:
    """Physical disc plus the barrier shape drawn around it.

    ``d_base`` is the radius added while the audio risk signal is ON.
    """

    xc: float
    yc: float
    r: float
    d_base: float = 0.0
    shape: Shape = Circle()

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise ValueError(f"obstacle radius must be positive, got {self.r}")
        if not self.d_base >= 0:
            raise ValueError(f"d_base must be nonnegative, got {self.d_base}")

    @property
    def center(self) -> np.ndarray:
        return np.array([self.xc, self.yc])

    def effective_radius(self, z: int) -> float:
        return self.r + self.d_base * z


@dataclass(frozen=True)
class CircleGeometry:
    r: float

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise ValueError(f"circle radius must be positive, got {self.r}")

    def axes(self) -> tuple[float, float, float]:
        return (self.r, self.r, 0.0)


@dataclass(frozen=True)
class EllipseGeometry:
    a: float
    b: float
    phi: float = 0.0

    def __post_init__(self) -> None:
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"ellipse axes must be positive, got a={self.a}, b={self.b}")

    def axes(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.phi)

    def quadratic_form(self) -> np.ndarray:
        c, s = math.cos(self.phi), math.sin(self.phi)
        ia2, ib2 = 1.0 / self.a**2, 1.0 / self.b**2
        off = c * s * (ia2 - ib2)
        return np.array(
            [
                [c * c * ia2 + s * s * ib2, off],
                [off, s * s * ia2 + c * c * ib2],
            ]
        )


@dataclass(frozen=True)
class BarrierGeometry:
    """A barrier instance at one control step: where it is and its axes."""

    center: tuple[float, float]
    geom: Union[CircleGeometry, EllipseGeometry]


@dataclass(frozen=True)
class BarrierParams:
    c1: float = 3.0
    c2: float = 1.0

    def __post_init__(self) -> None:
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError(f"barrier gains must be positive, got c1={self.c1}, c2={self.c2}")


@dataclass(frozen=True)
class BarrierEval:
    h1: float
    grad_h1: np.ndarray
    hess_h1: np.ndarray
    h2: float
    Lf_h2: float
    Lg_h2: np.ndarray


def h1_circle(state_xy, obs: Obstacle, r_eff: float) -> float:
    """Normalized circular barrier ``|p - c|^2 / r_eff^2 - 1``."""
    if not r_eff > 0:
        raise ValueError(f"r_eff must be positive, got {r_eff}")
    dx = state_xy[0] - obs.xc
    dy = state_xy[1] - obs.yc
    return (dx * dx + dy * dy) / (r_eff * r_eff) - 1.0


def h1_ellipse(state_xy, center, geom: EllipseGeometry) -> float:
    dx = state_xy[0] - center[0]
    dy = state_xy[1] - center[1]
    c, s = math.cos(geom.phi), math.sin(geom.phi)
    u = (c * dx + s * dy) / geom.a
    w = (-s * dx + c * dy) / geom.b
    return u * u + w * w - 1.0


def goal_phi(center, goal) -> float:
    """Direction from the obstacle center toward the goal, on [-pi, pi)."""
    dx = goal[0] - center[0]
    dy = goal[1] - center[1]
    if dx == 0.0 and dy == 0.0:
        raise ValueError("goal coincides with obstacle center; alignment undefined")
    return wrap_angle(math.atan2(dy, dx))


def _hessian_entries(geom) -> tuple[float, float, float]:
    """``(H11, H12, H22)`` of the constant Hessian ``2 Q``."""
    if isinstance(geom, CircleGeometry):
        k = 2.0 / (geom.r * geom.r)
        return k, 0.0, k
    q = geom.quadratic_form()
    return 2.0 * q[0, 0], 2.0 * q[0, 1], 2.0 * q[1, 1]


def barrier_derivatives(state_xy, barrier: BarrierGeometry) -> tuple[np.ndarray, np.ndarray]:
    h11, h12, h22 = _hessian_entries(barrier.geom)
    dx = state_xy[0] - barrier.center[0]
    dy = state_xy[1] - barrier.center[1]
    return np.array([h11 * dx + h12 * dy, h12 * dx + h22 * dy]), np.array([[h11, h12], [h12, h22]])


def _h1(state_xy, barrier: BarrierGeometry) -> float:
    geom = barrier.geom
    if isinstance(geom, CircleGeometry):
        dx = state_xy[0] - barrier.center[0]
        dy = state_xy[1] - barrier.center[1]
        return (dx * dx + dy * dy) / (geom.r * geom.r) - 1.0
    return h1_ellipse(state_xy, barrier.center, geom)


def _terms(state: RobotState, barrier: BarrierGeometry, params: BarrierParams):
    # scalar arithmetic throughout; this runs once per obstacle per control step
    h11, h12, h22 = _hessian_entries(barrier.geom)
    dx = state.x - barrier.center[0]
    dy = state.y - barrier.center[1]
    gx, gy = h11 * dx + h12 * dy, h12 * dx + h22 * dy
    c, s = math.cos(state.theta), math.sin(state.theta)
    along = gx * c + gy * s
    across = -gx * s + gy * c
    curv = h11 * c * c + 2.0 * h12 * c * s + h22 * s * s
    v = state.v
    h1 = _h1((state.x, state.y), barrier)
    h2 = params.c1 * h1 + v * along
    lf = v * params.c1 * along + v * v * curv
    return h1, (gx, gy), (h11, h12, h22), h2, lf, (along, v * across)


def h2(state: RobotState, barrier: BarrierGeometry, params: BarrierParams) -> float:
    return _terms(state, barrier, params)[3]


def lie_derivatives(
    state: RobotState, barrier: BarrierGeometry, params: BarrierParams
) -> tuple[float, np.ndarray]:
    """Return ``(Lf_h2, Lg_h2)`` with ``Lg_h2 = [dh2/dv, dh2/dtheta]``."""
    _, _, _, _, lf, lg = _terms(state, barrier, params)
    return lf, np.array(lg)


def evaluate(state: RobotState, barrier: BarrierGeometry, params: BarrierParams) -> BarrierEval:
    h1, grad, (h11, h12, h22), h2v, lf, lg = _terms(state, barrier, params)
    return BarrierEval(
        h1=h1,
        grad_h1=np.array(grad),
        hess_h1=np.array([[h11, h12], [h12, h22]]),
        h2=h2v,
        Lf_h2=lf,
        Lg_h2=np.array(lg),
    )


def barrier_geometry(obs: Obstacle, z: int = 0, goal=None) -> BarrierGeometry:
    """Barrier drawn around ``obs`` for risk state ``z``.

    Circles use ``r_eff = r + d_base z``. Ellipses take the disc of radius
    ``r_eff`` as their minor axis, stretch the major axis by ``aspect``, and
    point it at ``goal``.
    """
    r_eff = obs.effective_radius(z)
    center = (obs.xc, obs.yc)
    if isinstance(obs.shape, Circle):
        return BarrierGeometry(center, CircleGeometry(r_eff))
    if goal is None:
        raise ValueError("elliptical barrier needs a goal to align with")
    phi = goal_phi(center, goal)
    return BarrierGeometry(center, EllipseGeometry(obs.shape.aspect * r_eff, r_eff, phi))
