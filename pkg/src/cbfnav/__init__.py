"""Audio-aware control barrier function navigation for a unicycle robot."""

from .audio import DetectorConfig, RiskTimeline, detect_stream
from .barrier import BarrierParams, Circle, Ellipse, Obstacle
from .dynamics import ControlInput, RobotState, step
from .navigation import NominalGains, WaypointPlan
from .safety_filter import ControlLimits, filter_control, solve_qp
from .sim import Mode, ScenarioConfig, run_monte_carlo, run_trial

__version__ = "0.1.0"
