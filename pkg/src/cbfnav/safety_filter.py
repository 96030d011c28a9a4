"""CBF-QP safety filter over the two controls (a, omega).

Each obstacle contributes one halfplane ``Lg_h2 . u >= -Lf_h2 - c2 h2``; the
box bounds add four more. The QP is a Euclidean projection of ``u_nom`` onto
that polygon, so it is solved exactly by enumerating active sets of size
0, 1 and 2.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .barrier import BarrierGeometry, BarrierParams, Obstacle, barrier_geometry, evaluate
from .dynamics import ControlInput, RobotState

FEAS_TOL = 1e-9
BRAKE_GAIN = 2.0


@dataclass(frozen=True)
class ControlLimits:
    a_max: float = 2.5
    omega_max: float = 1.0

    def __post_init__(self) -> None:
        if not (self.a_max > 0 and self.omega_max > 0):
            raise ValueError(f"control bounds must be positive: {self}")


@dataclass(frozen=True)
class LinearConstraint:
    """``g . u >= rhs`` on ``u = (a, omega)``."""

    g: tuple[float, float]
    rhs: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (*self.g, self.rhs)):
            raise ValueError(f"non-finite constraint: {self}")

    def residual(self, u) -> float:
        return self.g[0] * u[0] + self.g[1] * u[1] - self.rhs


@dataclass(frozen=True)
class QPResult:
    u: Optional[ControlInput]
    active_set: tuple[int, ...] = ()
    feasible: bool = True


@functools.lru_cache(maxsize=16)
def _box(limits: ControlLimits) -> tuple[LinearConstraint, ...]:
    return (
        LinearConstraint((1.0, 0.0), -limits.a_max),
        LinearConstraint((-1.0, 0.0), -limits.a_max),
        LinearConstraint((0.0, 1.0), -limits.omega_max),
        LinearConstraint((0.0, -1.0), -limits.omega_max),
    )


def box_constraints(limits: ControlLimits) -> list[LinearConstraint]:
    return list(_box(limits))


def assemble_constraint(
    state: RobotState, barrier: BarrierGeometry, params: BarrierParams
) -> LinearConstraint:
    ev = evaluate(state, barrier, params)
    return LinearConstraint(
        (float(ev.Lg_h2[0]), float(ev.Lg_h2[1])), -ev.Lf_h2 - params.c2 * ev.h2
    )


def _feasible(u, rows) -> bool:
    return all(g0 * u[0] + g1 * u[1] - r >= -FEAS_TOL for g0, g1, r in rows)


def _candidates(u_nom, rows):
    # plain floats: numpy overhead dominates on 2-vectors
    yield u_nom
    a0, w0 = u_nom
    for g0, g1, r in rows:
        gg = g0 * g0 + g1 * g1
        if gg > 0.0:
            s = (r - g0 * a0 - g1 * w0) / gg
            yield (a0 + s * g0, w0 + s * g1)
    for (p0, p1, pr), (q0, q1, qr) in itertools.combinations(rows, 2):
        det = p0 * q1 - p1 * q0
        scale = max(abs(p0), abs(p1), abs(q0), abs(q1))
        if abs(det) > 1e-12 * (1.0 + scale * scale):
            yield ((pr * q1 - p1 * qr) / det, (p0 * qr - pr * q0) / det)


def solve_qp(
    u_nom: ControlInput,
    constraints: Sequence[LinearConstraint],
    limits: ControlLimits = ControlLimits(),
) -> QPResult:
    """Project ``u_nom`` onto the constraints intersected with the control box.

    Candidates are visited in a fixed order (``u_nom``, single-face
    projections, pairwise vertices); the first one at minimum distance wins.
    """
    cons = list(constraints) + box_constraints(limits)
    rows = [(float(c.g[0]), float(c.g[1]), float(c.rhs)) for c in cons]
    un = (float(u_nom.a), float(u_nom.omega))
    best = None
    best_d = math.inf
    for cand in _candidates(un, rows):
        if not (math.isfinite(cand[0]) and math.isfinite(cand[1])) or not _feasible(cand, rows):
            continue
        d = (cand[0] - un[0]) ** 2 + (cand[1] - un[1]) ** 2
        if d < best_d:
            best, best_d = cand, d
            if d == 0.0:
                break
    if best is None:
        return QPResult(None, (), False)
    a = min(max(best[0], -limits.a_max), limits.a_max)
    w = min(max(best[1], -limits.omega_max), limits.omega_max)
    active = tuple(i for i, c in enumerate(cons) if abs(c.residual((a, w))) <= FEAS_TOL)
    return QPResult(ControlInput(a, w), active, True)


def brake_fallback(state: RobotState, limits: ControlLimits) -> ControlInput:
    a = float(np.clip(-BRAKE_GAIN * state.v, -limits.a_max, limits.a_max))
    return ControlInput(a, 0.0)


@dataclass
class FilterResult:
    u: ControlInput
    feasible: bool
    constraints: list[LinearConstraint] = field(default_factory=list)


def filter_control(
    state: RobotState,
    u_nom: ControlInput,
    obstacles: Sequence[Obstacle],
    params: BarrierParams,
    z: int = 0,
    goal=None,
    limits: ControlLimits = ControlLimits(),
) -> FilterResult:
    """Minimally modify ``u_nom`` so every obstacle barrier stays invariant.

    Barriers are rebuilt from the current risk state ``z`` and the active
    ``goal`` on every call. If the QP has no solution the robot brakes in
    place and ``feasible`` is False.
    """
    cons = [
        assemble_constraint(state, barrier_geometry(obs, z, goal), params) for obs in obstacles
    ]
    res = solve_qp(u_nom, cons, limits)
    if not res.feasible:
        return FilterResult(brake_fallback(state, limits), False, cons)
    return FilterResult(res.u, True, cons)
