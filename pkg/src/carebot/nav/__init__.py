from .mapping import OccupancyGrid, integrate_scan
from .costmap import CostmapStack, VirtualLayer, minutes_of_day, parse_window
from .planner import GoalBlocked, NoPath, PathPlan, StartBlocked, Unreachable, plan_path
from .follow import FollowConfig, FollowResult, PathStale, follow_path, safety_gate
from .mcl import LocalizationLost, MclConfig, ParticleSet, estimate, mcl_step
from .docking import DockFailed, dock

__all__ = [
    "CostmapStack",
    "DockFailed",
    "FollowConfig",
    "FollowResult",
    "GoalBlocked",
    "LocalizationLost",
    "MclConfig",
    "NoPath",
    "OccupancyGrid",
    "ParticleSet",
    "PathPlan",
    "PathStale",
    "StartBlocked",
    "Unreachable",
    "VirtualLayer",
    "dock",
    "estimate",
    "follow_path",
    "integrate_scan",
    "mcl_step",
    "minutes_of_day",
    "parse_window",
    "plan_path",
    "safety_gate",
]
