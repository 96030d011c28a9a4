"""Reference layouts for the two benchmark scenarios.

The true site coordinates are unpublished. These layouts are built so the
obstacle-free nominal paths come out near 6.75 m and 11.9 m.

Scenario 1 runs straight past two discs. Scenario 2 follows six waypoints
down into a valley and back up, with a disc near the middle of each of the
two long flanks and a jackhammer burst that covers both
encounters.
"""

from __future__ import annotations

import math
from dataclasses import replace
from functools import lru_cache
from typing import Optional

from .audio import DetectorConfig, RiskTimeline, detect_stream
from .barrier import Obstacle
from .dynamics import RobotState
from .fixtures import gated_noise
from .navigation import WaypointPlan
from .sim import Mode, ScenarioConfig

D_BASE = 0.3
RADIUS = 0.5

SCENARIO1_START = (0.5, 2.75, 0.0)
SCENARIO1_WAYPOINTS = ((7.25, 2.75),)
SCENARIO1_OBSTACLES = ((3.0, 2.75), (5.0, 2.45))

SCENARIO2_START = (0.35, 4.48, math.radians(-50.0))
SCENARIO2_WAYPOINTS = (
    (1.25, 3.41),
    (3.85, 1.22),
    (4.99, 1.02),
    (6.12, 1.22),
    (8.72, 3.41),
    (9.62, 4.48),
)
# on the first long flank's midpoint, and 0.3 m off the second's
SCENARIO2_OBSTACLES = ((2.55, 2.32), (7.61, 2.09))

# jackhammer active from 5 s to 22 s of a 40 s recording
SCENARIO2_BURSTS = ((5.0, 22.0),)
SCENARIO2_AUDIO_SECONDS = 40.0


def _discs(centers, r: float = RADIUS, d_base: float = D_BASE) -> tuple[Obstacle, ...]:
    return tuple(Obstacle(x, y, r, d_base) for x, y in centers)


def scenario1(mode: Mode = Mode.ELLIPSE, **overrides) -> ScenarioConfig:
    x, y, th = SCENARIO1_START
    cfg = ScenarioConfig(
        name="scenario1",
        start=RobotState(x, y, 0.0, th),
        plan=WaypointPlan(SCENARIO1_WAYPOINTS),
        obstacles=_discs(SCENARIO1_OBSTACLES),
        mode=mode,
    )
    return replace(cfg, **overrides)


def scenario2_audio(seed: int = 0, sample_rate: int = 16000):
    return gated_noise(
        SCENARIO2_AUDIO_SECONDS, SCENARIO2_BURSTS, sample_rate=sample_rate, seed=seed
    )


@lru_cache(maxsize=4)
def scenario2_timeline(detector: Optional[DetectorConfig] = None) -> RiskTimeline:
    fx = scenario2_audio()
    return detect_stream(fx.samples, fx.sample_rate, detector or DetectorConfig())


def scenario2(mode: Mode = Mode.ELLIPSE, timeline: Optional[RiskTimeline] = None, **overrides) -> ScenarioConfig:
    x, y, th = SCENARIO2_START
    cfg = ScenarioConfig(
        name="scenario2",
        start=RobotState(x, y, 0.0, th),
        plan=WaypointPlan(SCENARIO2_WAYPOINTS),
        obstacles=_discs(SCENARIO2_OBSTACLES),
        mode=mode,
        timeline=timeline if timeline is not None else scenario2_timeline(),
    )
    return replace(cfg, **overrides)


SCENARIOS = {1: scenario1, 2: scenario2}
