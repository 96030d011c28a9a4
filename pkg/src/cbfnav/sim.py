"""Closed-loop trials, seeded obstacle perturbation and Monte Carlo reports."""

from __future__ import annotations

import enum
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .audio import RiskTimeline
from .barrier import (
    BarrierParams,
    Circle,
    Ellipse,
    Obstacle,
    barrier_geometry,
    h1_circle,
)
from .dynamics import ControlInput, RobotState, step
from .navigation import NominalGains, WaypointPlan, advance_waypoint, nominal_control
from .safety_filter import ControlLimits, filter_control

log = logging.getLogger(__name__)

THREADS_ENV = "CBFNAV_THREADS"


class Mode(str, enum.Enum):
    NOMINAL = "nominal"
    CIRCLE = "circle"
    ELLIPSE = "ellipse"


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce a batch of trials.

    ``obstacles`` are physical discs; the barrier shape is chosen by ``mode``.
    """

    name: str
    start: RobotState
    plan: WaypointPlan
    obstacles: tuple[Obstacle, ...]
    mode: Mode = Mode.ELLIPSE
    timeline: Optional[RiskTimeline] = None
    trial_count: int = 15
    seed: int = 0
    t_max: float = 60.0
    dt: float = 0.1
    arena: tuple[float, float] = (10.0, 5.5)
    aspect: float = 1.8
    params: BarrierParams = BarrierParams()
    gains: NominalGains = NominalGains()
    limits: ControlLimits = ControlLimits()
    perturb: bool = True

    def __post_init__(self) -> None:
        if self.trial_count < 1:
            raise ValueError("trial_count must be >= 1")
        if not (self.t_max > 0 and self.dt > 0):
            raise ValueError("t_max and dt must be positive")
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        tol = self.plan.reach_tolerance
        for obs in self.obstacles:
            for wp in self.plan.waypoints:
                if math.hypot(wp[0] - obs.xc, wp[1] - obs.yc) <= obs.r + tol:
                    raise ValueError(f"waypoint {wp} lies within reach of obstacle {obs}")

    def shaped_obstacles(self, obstacles: Sequence[Obstacle]) -> list[Obstacle]:
        shape = Ellipse(self.aspect) if self.mode is Mode.ELLIPSE else Circle()
        return [replace(o, shape=shape) for o in obstacles]


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray  # (n, 4): x, y, v, theta
    controls: np.ndarray  # (n, 2); last row is zero
    z: np.ndarray
    min_h1: np.ndarray
    r_eff: np.ndarray  # (n, n_obs)
    barrier_axes: np.ndarray  # (n, n_obs, 3): a, b, phi
    obstacles: tuple[Obstacle, ...]
    infeasible: np.ndarray

    CSV_HEADER = ("t_s", "x_m", "y_m", "v_mps", "theta_rad", "a_cmd", "omega_cmd", "z", "min_h1")

    def rows(self):
        for i in range(len(self.t)):
            yield (
                self.t[i],
                *self.states[i],
                *self.controls[i],
                int(self.z[i]),
                self.min_h1[i],
            )


@dataclass(frozen=True)
class TrialMetrics:
    path_length: float
    min_signed_distance: float
    violation_time: float
    completion_time: float
    success: bool
    qp_infeasible_steps: int = 0
    diagnostic: str = ""


METRIC_FIELDS = ("path_length", "min_signed_distance", "violation_time", "completion_time")


@dataclass
class AggregateReport:
    """Mean/std over successful trials; the success ratio counts all trials."""

    method: str
    trials: list[TrialMetrics]
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)

    @property
    def successes(self) -> int:
        return sum(t.success for t in self.trials)

    @property
    def success_ratio(self) -> float:
        return self.successes / len(self.trials)

    @property
    def available(self) -> bool:
        return self.successes > 0

    @classmethod
    def from_trials(cls, method: str, trials: Sequence[TrialMetrics]) -> "AggregateReport":
        ok = [t for t in trials if t.success]
        mean, std = {}, {}
        for name in METRIC_FIELDS:
            vals = np.array([getattr(t, name) for t in ok], dtype=float)
            mean[name] = float(vals.mean()) if ok else math.nan
            if not ok:
                std[name] = math.nan
            elif np.all(vals == vals[0]):
                # also covers +inf distances when there are no obstacles
                std[name] = 0.0
            else:
                std[name] = float(vals.std())
        return cls(method, list(trials), mean, std)


def perturb_obstacles(
    obstacles: Sequence[Obstacle], seed: int, trial_index: int
) -> list[Obstacle]:
    """Shift each center by independent draws from the open interval (-2r, 2r)."""
    rng = np.random.default_rng([seed, trial_index])
    out = []
    for obs in obstacles:
        offs = []
        for _ in range(2):
            u = rng.uniform(-1.0, 1.0)
            while u == -1.0:
                u = rng.uniform(-1.0, 1.0)
            offs.append(2.0 * obs.r * u)
        out.append(replace(obs, xc=obs.xc + offs[0], yc=obs.yc + offs[1]))
    return out


def signed_distance(state_xy, obs: Obstacle) -> float:
    """Distance to the physical disc boundary, negative inside."""
    return math.hypot(state_xy[0] - obs.xc, state_xy[1] - obs.yc) - obs.r


def trial_obstacles(config: ScenarioConfig, trial_index: int) -> list[Obstacle]:
    obs = list(config.obstacles)
    if config.perturb:
        obs = perturb_obstacles(obs, config.seed, trial_index)
    return config.shaped_obstacles(obs)


def run_trial(config: ScenarioConfig, trial_index: int) -> tuple[TrialMetrics, Trajectory]:
    obstacles = trial_obstacles(config, trial_index)
    timeline = config.timeline or RiskTimeline.constant(0)
    n_obs = len(obstacles)
    max_steps = int(round(config.t_max / config.dt))

    state = config.start
    plan = replace(config.plan, active_index=0)
    ts, states, controls, zs, min_h1, r_eff, axes, infeasible = [], [], [], [], [], [], [], []
    diagnostic = ""

    def record(t, s, u, z, bad):
        ts.append(t)
        states.append(s.as_array())
        controls.append(u.as_array())
        zs.append(z)
        min_h1.append(min((h1_circle((s.x, s.y), o, o.r) for o in obstacles), default=math.inf))
        r_eff.append([o.effective_radius(z) for o in obstacles])
        geoms = [barrier_geometry(o, z, plan.active) for o in obstacles]
        axes.append([g.geom.axes() for g in geoms])
        infeasible.append(bad)

    k = 0
    while k < max_steps and not plan.complete:
        t = k * config.dt
        z = timeline.at(t)
        goal = plan.active
        try:
            u_nom = nominal_control(state, goal, config.gains)
        except ValueError:
            # sitting exactly on the goal; the waypoint check will advance it
            u_nom = ControlInput(-config.gains.k1 * (state.v - config.gains.v_des), 0.0)
        if config.mode is Mode.NOMINAL:
            u, ok = u_nom.clipped(config.limits.a_max, config.limits.omega_max), True
        else:
            res = filter_control(state, u_nom, obstacles, config.params, z, goal, config.limits)
            u, ok = res.u, res.feasible
        record(t, state, u, z, not ok)
        try:
            state = step(state, u, config.dt)
        except ValueError as exc:
            diagnostic = f"diverged at t={t:.2f}: {exc}"
            log.warning("trial %d %s", trial_index, diagnostic)
            break
        plan = advance_waypoint(plan, state)
        k += 1

    t_end = k * config.dt
    record(t_end, state, ControlInput(0.0, 0.0), timeline.at(t_end), False)
    traj = Trajectory(
        t=np.array(ts),
        states=np.array(states),
        controls=np.array(controls),
        z=np.array(zs, dtype=int),
        min_h1=np.array(min_h1),
        r_eff=np.array(r_eff).reshape(len(ts), n_obs),
        barrier_axes=np.array(axes).reshape(len(ts), n_obs, 3),
        obstacles=tuple(obstacles),
        infeasible=np.array(infeasible, dtype=bool),
    )
    return compute_metrics(traj, config.dt, plan.complete and not diagnostic, diagnostic), traj


def compute_metrics(traj: Trajectory, dt: float, success: bool, diagnostic: str = "") -> TrialMetrics:
    xy = traj.states[:, :2]
    path = float(np.sum(np.hypot(*np.diff(xy, axis=0).T))) if len(xy) > 1 else 0.0
    # every state reached by the controller, i.e. all but the initial one
    visited = xy[1:] if len(xy) > 1 else xy
    if traj.obstacles:
        sd = np.array(
            [[signed_distance(p, o) for o in traj.obstacles] for p in visited]
        ).min(axis=1)
    else:
        sd = np.full(len(visited), math.inf)
    return TrialMetrics(
        path_length=path,
        min_signed_distance=float(sd.min()),
        violation_time=dt * int(np.count_nonzero(sd < 0.0)),
        completion_time=float(traj.t[-1]),
        success=bool(success),
        qp_infeasible_steps=int(traj.infeasible.sum()),
        diagnostic=diagnostic,
    )


def _trial_metrics(args) -> TrialMetrics:
    config, i = args
    return run_trial(config, i)[0]


def _trial_full(args) -> tuple[TrialMetrics, Trajectory]:
    config, i = args
    return run_trial(config, i)


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        return max(0, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _map_trials(fn, config: ScenarioConfig, workers: Optional[int]):
    workers = worker_count() if workers is None else workers
    jobs = [(config, i) for i in range(config.trial_count)]
    if workers > 1:
        # pool.map keeps trial order, so the reduction is deterministic
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def run_monte_carlo(config: ScenarioConfig, workers: Optional[int] = None) -> AggregateReport:
    trials = _map_trials(_trial_metrics, config, workers)
    return AggregateReport.from_trials(method_label(config), trials)


def run_batch(
    config: ScenarioConfig, workers: Optional[int] = None
) -> tuple[AggregateReport, list[Trajectory]]:
    """Like ``run_monte_carlo`` but also keeps every trajectory."""
    results = _map_trials(_trial_full, config, workers)
    report = AggregateReport.from_trials(method_label(config), [m for m, _ in results])
    return report, [t for _, t in results]


def method_label(config: ScenarioConfig) -> str:
    if config.mode is Mode.NOMINAL:
        return "Nominal Control"
    kind = "Circular CBF" if config.mode is Mode.CIRCLE else "Elliptical CBF"
    return f"{kind} ({'audio' if config.timeline is not None else 'static'})"


def polyline_length(start, waypoints) -> float:
    pts = np.array([start, *waypoints], dtype=float)
    return float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))
