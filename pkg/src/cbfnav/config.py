"""TOML run configuration.

Omitted geometry comes from the preset named by ``scenario``; omitted gains
and bounds fall back to the controller defaults. Every problem surfaces as a
``ConfigError`` whose message starts with the offending key.

Schema (all lengths in m, times in s, angles in rad)::

    scenario = 1            # preset for omitted geometry and audio
    name = "scenario1"
    mode = "ellipse"        # nominal | circle | ellipse
    seed = 0
    trials = 15
    t_max = 60.0
    dt = 0.1
    perturb = true
    arena = [10.0, 5.5]     # length, width
    aspect = 1.8            # ellipse major/minor ratio
    c1 = 3.0
    c2 = 1.0
    k1 = 1.0
    k2 = 1.0
    v_des = 0.5             # m/s
    a_max = 2.5             # m/s^2
    omega_max = 1.0         # rad/s

    [start]
    x = 0.5
    y = 2.75
    theta = 0.0

    [waypoints]
    points = [[7.25, 2.75]]
    reach_tolerance = 0.15
    goal_tolerance = 0.05

    [[obstacles]]
    x = 3.0
    y = 2.75
    r = 0.5
    d_base = 0.3

    [audio]
    source = "none"         # none | fixture | inline
    times = [0.0]           # inline only: risk switches, s
    values = [0]            # inline only: risk state from each time on

    [detector]              # used when audio is detected from a recording
    mu_on = 2.0
    ...
"""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Callable, Optional

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .audio import DetectorConfig, RiskTimeline
from .barrier import BarrierParams, Obstacle
from .dynamics import RobotState
from .navigation import NominalGains, WaypointPlan
from .safety_filter import ControlLimits
from .sim import Mode, ScenarioConfig


class ConfigError(ValueError):
    pass


def _positive(v) -> bool:
    return v > 0


def _nonneg(v) -> bool:
    return v >= 0


_NUMBER = (int, float)

# key -> (accepted types, check, description of the check)
_TOP: dict[str, tuple[tuple, Optional[Callable], str]] = {
    "scenario": ((int,), lambda v: v in (1, 2), "must be 1 or 2"),
    "name": ((str,), None, ""),
    "mode": ((str,), lambda v: v in {m.value for m in Mode}, "must be nominal, circle or ellipse"),
    "seed": ((int,), lambda v: 0 <= v < 2**64, "must be an unsigned 64-bit integer"),
    "trials": ((int,), lambda v: v >= 1, "must be at least 1"),
    "t_max": (_NUMBER, _positive, "must be positive"),
    "dt": (_NUMBER, _positive, "must be positive"),
    "perturb": ((bool,), None, ""),
    "arena": ((list,), lambda v: len(v) == 2 and all(_is_num(x) and x > 0 for x in v), "must be two positive numbers"),
    "aspect": (_NUMBER, lambda v: v >= 1, "must be at least 1"),
    "c1": (_NUMBER, _positive, "must be positive"),
    "c2": (_NUMBER, _positive, "must be positive"),
    "k1": (_NUMBER, _positive, "must be positive"),
    "k2": (_NUMBER, _positive, "must be positive"),
    "v_des": (_NUMBER, _positive, "must be positive"),
    "a_max": (_NUMBER, _positive, "must be positive"),
    "omega_max": (_NUMBER, _positive, "must be positive"),
}
_TABLES = {"start", "waypoints", "obstacles", "audio", "detector"}

_START = {k: (_NUMBER, None, "") for k in ("x", "y", "theta")}
_WAYPOINTS = {
    "points": ((list,), None, ""),
    "reach_tolerance": (_NUMBER, _positive, "must be positive"),
    "goal_tolerance": (_NUMBER, _positive, "must be positive"),
}
_OBSTACLE = {
    "x": (_NUMBER, None, ""),
    "y": (_NUMBER, None, ""),
    "r": (_NUMBER, _positive, "must be positive"),
    "d_base": (_NUMBER, _nonneg, "must be nonnegative"),
}
_AUDIO = {
    "source": ((str,), lambda v: v in ("none", "fixture", "inline"), "must be none, fixture or inline"),
    "times": ((list,), None, ""),
    "values": ((list,), None, ""),
}


def _is_num(v) -> bool:
    return isinstance(v, _NUMBER) and not isinstance(v, bool)


def _check_table(table: dict, schema: dict, prefix: str) -> dict:
    if not isinstance(table, dict):
        raise ConfigError(f"{prefix.rstrip('.')}: expected a table")
    out = {}
    for key, value in table.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(f"{path}: unknown key")
        types, check, why = schema[key]
        ok_type = isinstance(value, types) and not (isinstance(value, bool) and bool not in types)
        if not ok_type:
            names = " or ".join(t.__name__ for t in types)
            raise ConfigError(f"{path}: expected {names}, got {type(value).__name__}")
        if types == _NUMBER and not math.isfinite(value):
            raise ConfigError(f"{path}: must be finite")
        if check is not None and not check(value):
            raise ConfigError(f"{path}: {why}, got {value!r}")
        out[key] = float(value) if types == _NUMBER else value
    return out


def _points(raw, path: str) -> tuple[tuple[float, float], ...]:
    pts = []
    for i, p in enumerate(raw):
        if not (isinstance(p, list) and len(p) == 2 and all(_is_num(v) and math.isfinite(v) for v in p)):
            raise ConfigError(f"{path}[{i}]: expected [x, y] numbers")
        pts.append((float(p[0]), float(p[1])))
    if not pts:
        raise ConfigError(f"{path}: at least one waypoint is required")
    return tuple(pts)


def _detector(table) -> DetectorConfig:
    known = {f.name: f for f in fields(DetectorConfig)}
    if not isinstance(table, dict):
        raise ConfigError("detector: expected a table")
    kw = {}
    for key, value in table.items():
        if key not in known:
            raise ConfigError(f"detector.{key}: unknown key")
        if key == "lag_range":
            if not (isinstance(value, list) and len(value) == 2 and all(type(v) is int for v in value)):
                raise ConfigError("detector.lag_range: expected [min_lag, max_lag] integers")
            kw[key] = (value[0], value[1])
        elif key in ("floor_window", "envelope_window"):
            if type(value) is not int:
                raise ConfigError(f"detector.{key}: expected int")
            kw[key] = value
        else:
            if not _is_num(value) or not math.isfinite(value):
                raise ConfigError(f"detector.{key}: expected a finite number")
            kw[key] = float(value)
    try:
        return DetectorConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"detector: {exc}") from None


def load_document(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # tomli reports "(at line L, column C)"
        raise ConfigError(f"syntax error: {exc}") from None


def parse_detector(text: str) -> DetectorConfig:
    doc = load_document(text)
    return _detector(doc.get("detector", {}))


def parse_config(text: str) -> ScenarioConfig:
    """Validate a TOML document and build the scenario it describes."""
    from . import scenarios

    doc = load_document(text)
    for key in doc:
        if key not in _TOP and key not in _TABLES:
            raise ConfigError(f"{key}: unknown key")
    top = _check_table({k: v for k, v in doc.items() if k in _TOP}, _TOP, "")
    detector = _detector(doc.get("detector", {}))

    scenario_id = top.get("scenario", 1)
    mode = Mode(top.get("mode", Mode.ELLIPSE.value))
    base = scenarios.SCENARIOS[scenario_id](mode) if scenario_id == 1 else scenarios.scenario2(
        mode, timeline=scenarios.scenario2_timeline(detector)
    )

    start = base.start
    if "start" in doc:
        s = _check_table(doc["start"], _START, "start.")
        start = RobotState(s.get("x", start.x), s.get("y", start.y), 0.0, s.get("theta", start.theta))

    plan = base.plan
    if "waypoints" in doc:
        w = _check_table(doc["waypoints"], _WAYPOINTS, "waypoints.")
        pts = _points(w["points"], "waypoints.points") if "points" in w else plan.waypoints
        plan = WaypointPlan(
            pts,
            reach_tolerance=w.get("reach_tolerance", plan.reach_tolerance),
            goal_tolerance=w.get("goal_tolerance", plan.goal_tolerance),
        )

    obstacles = base.obstacles
    if "obstacles" in doc:
        raw = doc["obstacles"]
        if not isinstance(raw, list):
            raise ConfigError("obstacles: expected an array of tables")
        obstacles = []
        for i, item in enumerate(raw):
            o = _check_table(item, _OBSTACLE, f"obstacles[{i}].")
            missing = {"x", "y", "r"} - set(o)
            if missing:
                raise ConfigError(f"obstacles[{i}].{sorted(missing)[0]}: required")
            obstacles.append(Obstacle(o["x"], o["y"], o["r"], o.get("d_base", 0.0)))
        obstacles = tuple(obstacles)

    timeline = base.timeline
    if "audio" in doc:
        a = _check_table(doc["audio"], _AUDIO, "audio.")
        source = a.get("source", "inline" if "times" in a else "none")
        if source == "none":
            timeline = None
        elif source == "fixture":
            timeline = scenarios.scenario2_timeline(detector)
        else:
            times, values = a.get("times"), a.get("values")
            if times is None or values is None:
                raise ConfigError("audio.times: inline audio needs times and values")
            if not all(_is_num(t) for t in times):
                raise ConfigError("audio.times: expected numbers")
            if not all(type(v) is int and v in (0, 1) for v in values):
                raise ConfigError("audio.values: expected 0 or 1 entries")
            try:
                timeline = RiskTimeline(tuple(float(t) for t in times), tuple(values))
            except ValueError as exc:
                raise ConfigError(f"audio.times: {exc}") from None

    gains = NominalGains(
        top.get("k1", base.gains.k1), top.get("k2", base.gains.k2), top.get("v_des", base.gains.v_des)
    )
    try:
        return replace(
            base,
            name=top.get("name", base.name),
            start=start,
            plan=plan,
            obstacles=obstacles,
            timeline=timeline,
            trial_count=top.get("trials", base.trial_count),
            seed=top.get("seed", base.seed),
            t_max=top.get("t_max", base.t_max),
            dt=top.get("dt", base.dt),
            arena=tuple(float(v) for v in top.get("arena", base.arena)),
            aspect=top.get("aspect", base.aspect),
            params=BarrierParams(top.get("c1", base.params.c1), top.get("c2", base.params.c2)),
            gains=gains,
            limits=ControlLimits(
                top.get("a_max", base.limits.a_max), top.get("omega_max", base.limits.omega_max)
            ),
            perturb=top.get("perturb", base.perturb),
        )
    except ValueError as exc:
        # cross-field checks, e.g. a waypoint inside an obstacle
        raise ConfigError(f"config: {exc}") from None


def to_document(config: ScenarioConfig, detector: Optional[DetectorConfig] = None) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "name": config.name,
        "mode": config.mode.value,
        "seed": config.seed,
        "trials": config.trial_count,
        "t_max": config.t_max,
        "dt": config.dt,
        "perturb": config.perturb,
        "arena": list(config.arena),
        "aspect": config.aspect,
        "c1": config.params.c1,
        "c2": config.params.c2,
        "k1": config.gains.k1,
        "k2": config.gains.k2,
        "v_des": config.gains.v_des,
        "a_max": config.limits.a_max,
        "omega_max": config.limits.omega_max,
        "start": {"x": config.start.x, "y": config.start.y, "theta": config.start.theta},
        "waypoints": {
            "points": [list(p) for p in config.plan.waypoints],
            "reach_tolerance": config.plan.reach_tolerance,
            "goal_tolerance": config.plan.goal_tolerance,
        },
        "obstacles": [{"x": o.xc, "y": o.yc, "r": o.r, "d_base": o.d_base} for o in config.obstacles],
    }
    if config.timeline is None:
        doc["audio"] = {"source": "none"}
    else:
        doc["audio"] = {
            "source": "inline",
            "times": list(config.timeline.times),
            "values": list(config.timeline.values),
        }
    if detector is not None:
        d = asdict(detector)
        d["lag_range"] = list(d["lag_range"])
        doc["detector"] = d
    return doc


def serialize(config: ScenarioConfig, detector: Optional[DetectorConfig] = None) -> str:
    return tomli_w.dumps(to_document(config, detector))


@dataclass(frozen=True)
class RunManifest:
    """Where a run came from and where its files go."""

    config_path: Optional[str]
    scenario: int
    mode: str
    seed: int
    out_dir: str
    audio_path: Optional[str] = None
    trials: int = 15
