"""Independent checks on the barrier algebra and the QP solver.

Nothing here reuses the analytic gradients or the active-set enumeration:

* Lie derivatives come from central differences of a finite-difference
  ``h2`` built on a separately coded ``h1``.
* QP optima are compared with the exact minimum over a lattice of the
  control box, found by sweeping lattice columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .barrier import (
    BarrierGeometry,
    BarrierParams,
    Circle,
    CircleGeometry,
    Ellipse,
    EllipseGeometry,
    Obstacle,
    _h1,
    barrier_geometry,
    evaluate,
    h2,
)
from .dynamics import ControlInput, RobotState, step
from .navigation import NominalGains, nominal_control
from .safety_filter import ControlLimits, LinearConstraint, filter_control, solve_qp


def _h1_reference(geom, center) -> Callable[[float, float], float]:
    """``h1`` written in the ellipse's body frame (or plainly, for a circle)."""
    cx, cy = center
    if isinstance(geom, CircleGeometry):
        r = geom.r
        return lambda x, y: math.hypot(x - cx, y - cy) ** 2 / r**2 - 1.0
    a, b, phi = geom.a, geom.b, geom.phi

    def h1(x, y):
        # rotate the offset by -phi into the body frame
        ang = math.atan2(y - cy, x - cx) - phi
        rho = math.hypot(x - cx, y - cy)
        return (rho * math.cos(ang) / a) ** 2 + (rho * math.sin(ang) / b) ** 2 - 1.0

    return h1


def h2_reference(state: np.ndarray, barrier: BarrierGeometry, c1: float, delta: float = 1e-4) -> float:
    """``c1 h1 + dh1/dt`` with the time derivative taken by central difference.

    ``h1`` is quadratic in position, so the difference is exact up to rounding.
    """
    h1 = _h1_reference(barrier.geom, barrier.center)
    x, y, v, th = state
    c, s = math.cos(th), math.sin(th)
    rate = (h1(x + delta * c, y + delta * s) - h1(x - delta * c, y - delta * s)) / (2 * delta)
    return c1 * h1(x, y) + v * rate


def lie_reference(
    state: np.ndarray, barrier: BarrierGeometry, c1: float, eps: float = 1e-4
) -> tuple[float, np.ndarray]:
    """Directional central differences of ``h2`` along the drift and input fields."""
    x, y, v, th = state
    fields = (
        np.array([v * math.cos(th), v * math.sin(th), 0.0, 0.0]),
        np.array([0.0, 0.0, 1.0, 0.0]),
        np.array([0.0, 0.0, 0.0, 1.0]),
    )
    out = []
    for f in fields:
        hp = h2_reference(state + eps * f, barrier, c1)
        hm = h2_reference(state - eps * f, barrier, c1)
        out.append((hp - hm) / (2 * eps))
    return out[0], np.array(out[1:])


def relative_error(value, reference) -> float:
    """``|value - reference| / max(|reference|, 1)`` elementwise, maximized."""
    v = np.atleast_1d(np.asarray(value, dtype=float))
    r = np.atleast_1d(np.asarray(reference, dtype=float))
    return float(np.max(np.abs(v - r) / np.maximum(np.abs(r), 1.0)))


def random_barrier(rng: np.random.Generator, shape: str) -> BarrierGeometry:
    center = tuple(rng.uniform(-3.0, 3.0, size=2))
    if shape == "circle":
        return BarrierGeometry(center, CircleGeometry(rng.uniform(0.2, 1.5)))
    b = rng.uniform(0.2, 1.5)
    return BarrierGeometry(center, EllipseGeometry(b * rng.uniform(1.0, 3.0), b, rng.uniform(-math.pi, math.pi)))


def random_state_near(rng: np.random.Generator, barrier: BarrierGeometry) -> RobotState:
    cx, cy = barrier.center
    rho = rng.uniform(0.1, 4.0)
    ang = rng.uniform(-math.pi, math.pi)
    return RobotState(
        cx + rho * math.cos(ang),
        cy + rho * math.sin(ang),
        rng.uniform(-1.0, 1.0),
        rng.uniform(-math.pi, math.pi),
    )


@dataclass(frozen=True)
class LieCheck:
    samples: int
    max_rel_error_lf: float
    max_rel_error_lg: float
    max_aspect_one_diff: float


def lie_derivative_check(samples: int = 100, seed: int = 0) -> LieCheck:
    """Analytic Lie derivatives against finite differences for both shapes,
    and aspect-one ellipses against circles."""
    rng = np.random.default_rng(seed)
    params = BarrierParams()
    err_lf = err_lg = 0.0
    for i in range(samples):
        barrier = random_barrier(rng, "circle" if i % 2 else "ellipse")
        state = random_state_near(rng, barrier)
        ev = evaluate(state, barrier, params)
        lf_ref, lg_ref = lie_reference(state.as_array(), barrier, params.c1)
        err_lf = max(err_lf, relative_error(ev.Lf_h2, lf_ref))
        err_lg = max(err_lg, relative_error(ev.Lg_h2, lg_ref))

    diff = 0.0
    for _ in range(samples):
        circ = random_barrier(rng, "circle")
        r = circ.geom.r
        ell = BarrierGeometry(circ.center, EllipseGeometry(r, r, rng.uniform(-math.pi, math.pi)))
        state = random_state_near(rng, circ)
        ec, ee = evaluate(state, circ, params), evaluate(state, ell, params)
        for p, q in ((ec.h1, ee.h1), (ec.h2, ee.h2), (ec.Lf_h2, ee.Lf_h2)):
            diff = max(diff, abs(p - q))
        diff = max(diff, float(np.max(np.abs(ec.Lg_h2 - ee.Lg_h2))))
    return LieCheck(samples, err_lf, err_lg, diff)


def grid_qp_minimum(
    u_nom: Sequence[float],
    constraints: Sequence[LinearConstraint],
    limits: ControlLimits,
    resolution: float = 1e-3,
) -> Optional[tuple[float, tuple[float, float]]]:
    """Exact minimum of ``|u - u_nom|^2`` over feasible lattice points.

    The lattice has spacing ``resolution`` and includes the box corners. Each
    column of fixed ``a`` has an interval of feasible ``omega``; the best point
    in a column is the lattice value nearest ``u_nom[1]`` inside it.
    Returns None if no lattice point is feasible.
    """
    na = int(round(2 * limits.a_max / resolution))
    nw = int(round(2 * limits.omega_max / resolution))
    a = -limits.a_max + resolution * np.arange(na + 1)
    lo = np.full(a.shape, -limits.omega_max)
    hi = np.full(a.shape, limits.omega_max)
    ok = np.ones(a.shape, dtype=bool)
    for c in constraints:
        g0, g1 = c.g
        rest = c.rhs - g0 * a
        if g1 > 0:
            lo = np.maximum(lo, rest / g1)
        elif g1 < 0:
            hi = np.minimum(hi, rest / g1)
        else:
            ok &= rest <= 0.0
    # lattice indices inside [lo, hi]; a hair of slack for values landing on a node
    jlo = np.ceil((lo + limits.omega_max) / resolution - 1e-9)
    jhi = np.floor((hi + limits.omega_max) / resolution + 1e-9)
    jlo = np.maximum(jlo, 0)
    jhi = np.minimum(jhi, nw)
    ok &= jlo <= jhi
    if not ok.any():
        return None
    jt = np.round((u_nom[1] + limits.omega_max) / resolution)
    j = np.clip(jt, jlo, jhi)
    w = -limits.omega_max + resolution * j
    # the slack above may admit nodes a rounding error outside a face
    for c in constraints:
        ok &= c.g[0] * a + c.g[1] * w - c.rhs >= -1e-9
    if not ok.any():
        return None
    f = np.where(ok, (a - u_nom[0]) ** 2 + (w - u_nom[1]) ** 2, np.inf)
    k = int(np.argmin(f))
    return float(f[k]), (float(a[k]), float(w[k]))


@dataclass(frozen=True)
class QPCheck:
    instances: int
    max_gap: float  # solver objective minus lattice objective
    max_lattice_excess: float  # lattice objective minus solver objective
    exact_when_feasible: bool
    infeasible_agree: bool
    lattice_misses: int  # solver feasible, lattice empty (thin regions)


def random_qp_instance(rng: np.random.Generator):
    m = int(rng.integers(0, 4))
    cons = []
    for _ in range(m):
        g = rng.normal(size=2)
        if rng.random() < 0.1:
            g[int(rng.integers(0, 2))] = 0.0
        cons.append(LinearConstraint((float(g[0]), float(g[1])), float(rng.normal(scale=1.5))))
    u_nom = ControlInput(float(rng.uniform(-4.0, 4.0)), float(rng.uniform(-2.0, 2.0)))
    return u_nom, cons


def qp_check(instances: int = 1000, seed: int = 0, limits: ControlLimits = ControlLimits()) -> QPCheck:
    rng = np.random.default_rng(seed)
    gap = excess = -math.inf
    exact = agree = True
    misses = 0
    for _ in range(instances):
        u_nom, cons = random_qp_instance(rng)
        res = solve_qp(u_nom, cons, limits)
        grid = grid_qp_minimum((u_nom.a, u_nom.omega), cons, limits)
        nominal_ok = abs(u_nom.a) <= limits.a_max and abs(u_nom.omega) <= limits.omega_max and all(
            c.residual((u_nom.a, u_nom.omega)) >= 0.0 for c in cons
        )
        if nominal_ok and (res.u is None or (res.u.a, res.u.omega) != (u_nom.a, u_nom.omega)):
            exact = False
        if res.u is None:
            agree &= grid is None
            continue
        if grid is None:
            misses += 1
            continue
        f = (res.u.a - u_nom.a) ** 2 + (res.u.omega - u_nom.omega) ** 2
        gap = max(gap, f - grid[0])
        excess = max(excess, grid[0] - f)
    return QPCheck(instances, gap, excess, exact, agree, misses)


@dataclass(frozen=True)
class InvarianceRun:
    min_h2: float
    min_h1: float
    infeasible_steps: int


def random_safe_start(rng: np.random.Generator, obstacle: Obstacle, goal, params: BarrierParams) -> RobotState:
    """Rejection-sample a state with ``h1 > 0.1`` and ``h2 > 0``."""
    barrier = barrier_geometry(obstacle, 0, goal)
    while True:
        ang = rng.uniform(-math.pi, math.pi)
        rho = rng.uniform(obstacle.r, 4.0 * obstacle.r * (obstacle.shape.aspect if isinstance(obstacle.shape, Ellipse) else 1.0))
        s = RobotState(
            obstacle.xc + rho * math.cos(ang),
            obstacle.yc + rho * math.sin(ang),
            rng.uniform(0.0, 1.0),
            rng.uniform(-math.pi, math.pi),
        )
        ev = evaluate(s, barrier, params)
        if ev.h1 > 0.1 and ev.h2 > 0.0:
            return s


def invariance_rollout(
    start: RobotState,
    obstacle: Obstacle,
    goal,
    dt: float = 1e-3,
    horizon: float = 30.0,
    params: BarrierParams = BarrierParams(),
    limits: ControlLimits = ControlLimits(),
) -> InvarianceRun:
    """Drive toward ``goal`` through the safety filter and track the barriers."""
    gains = NominalGains()
    barrier = barrier_geometry(obstacle, 0, goal)
    state = start
    min_h2 = min_h1 = math.inf
    bad = 0
    for _ in range(int(round(horizon / dt))):
        min_h2 = min(min_h2, h2(state, barrier, params))
        min_h1 = min(min_h1, _h1((state.x, state.y), barrier))
        if math.hypot(goal[0] - state.x, goal[1] - state.y) < 1e-6:
            u_nom = ControlInput(-gains.k1 * state.v, 0.0)
        else:
            u_nom = nominal_control(state, goal, gains)
        res = filter_control(state, u_nom, [obstacle], params, 0, goal, limits)
        bad += not res.feasible
        state = step(state, res.u, dt)
    ev = evaluate(state, barrier, params)
    return InvarianceRun(min(min_h2, ev.h2), min(min_h1, ev.h1), bad)


def invariance_case(seed: int, index: int):
    """One reproducible (start, obstacle, goal) with the goal behind the obstacle."""
    rng = np.random.default_rng([seed, index])
    r = rng.uniform(0.3, 0.8)
    shape = Circle() if index % 2 == 0 else Ellipse(1.8)
    obstacle = Obstacle(0.0, 0.0, r, 0.0, shape)
    ang = rng.uniform(-math.pi, math.pi)
    goal = (6.0 * math.cos(ang), 6.0 * math.sin(ang))
    return random_safe_start(rng, obstacle, goal, BarrierParams()), obstacle, goal
