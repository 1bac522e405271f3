"""Autonomous docking: plan to the charger, follow, align, latch charging."""

from __future__ import annotations

from ..geometry import Pose2D
from ..simworld.world import DriveCmd, FacilityWorld, SIM_DT, step
from .costmap import CostmapStack
from .follow import FollowConfig, PathStale, follow_path, safety_gate
from .planner import NoPath, plan_path


class DockFailed(Exception):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


def dock(world: FacilityWorld, stack: CostmapStack, max_attempts: int = 3,
         timeout_s: float = 300.0) -> dict:
    """Drive the robot onto its charger; sets robot.docked on success.

    Plans with the layered costmap, follows with the safety gate in the loop,
    re-plans on PathStale, and gives up with DockFailed after max_attempts.
    """
    cfg = FollowConfig(goal_tol_xy=0.08, goal_tol_theta=0.1)
    last_error = "timeout"
    for attempt in range(1, max_attempts + 1):
        try:
            plan = plan_path(stack, world.robot.pose, world.dock, at_time=world.clock)
        except NoPath as e:
            last_error = f"no_path: {e}"
            continue
        deadline = world.clock + timeout_s / max_attempts
        stalled = 0
        while world.clock < deadline:
            try:
                res = follow_path(plan, world.robot.pose, SIM_DT, cfg)
            except PathStale:
                break   # re-plan on next attempt
            if res.done:
                world.robot.docked = True
                world.robot.v = world.robot.omega = 0.0
                return {"success": True, "attempts": attempt}
            gated, _ = safety_gate(res.cmd, world.robot.bumpers,
                                   world.proximity_ring(), world.robot.floor_sensors)
            step(world, DriveCmd(gated.v, gated.omega), SIM_DT)
            if any(world.robot.bumpers):
                stalled += 1
                if stalled > 20:
                    break
            else:
                stalled = 0
        last_error = "follow stalled" if world.clock < deadline else "timeout"
    raise DockFailed(last_error)
