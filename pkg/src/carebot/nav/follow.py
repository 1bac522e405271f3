"""Path following (pure pursuit) and the reflexive safety gate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import Pose2D, wrap_angle
from .planner import PathPlan

MAX_SPEED = 1.0
MAX_OMEGA = 2.0


class PathStale(Exception):
    """Pose has drifted too far laterally from the plan; re-plan required."""


@dataclass
class FollowConfig:
    lookahead: float = 0.5
    goal_tol_xy: float = 0.10
    goal_tol_theta: float = 0.15
    replan_threshold: float = 0.3
    k_omega: float = 2.5
    slow_radius: float = 0.6       # decelerate inside this distance of the goal
    align_tolerance: float = math.pi / 5   # rotate in place beyond this heading error


@dataclass
class FollowResult:
    cmd: "DriveCmdLike"
    done: bool = False


@dataclass
class DriveCmdLike:
    v: float = 0.0
    omega: float = 0.0


def _nearest_on_path(plan: PathPlan, pose: Pose2D) -> tuple[int, float]:
    best_i, best_d = 0, math.inf
    for i, wp in enumerate(plan.waypoints):
        d = wp.distance_to(pose)
        if d < best_d:
            best_i, best_d = i, d
    return best_i, best_d


def follow_path(plan: PathPlan, pose: Pose2D, dt: float = 0.05,
                cfg: FollowConfig | None = None) -> FollowResult:
    """One pure-pursuit control step toward the plan's lookahead point.

    Returns a zero command with done=True inside the goal tolerance; raises
    PathStale once lateral deviation exceeds the re-plan threshold.
    """
    cfg = cfg or FollowConfig()
    if not plan.waypoints:
        return FollowResult(DriveCmdLike(), done=True)
    goal = plan.waypoints[-1]
    dist_goal = pose.distance_to(goal)
    if dist_goal <= cfg.goal_tol_xy:
        herr = wrap_angle(goal.theta - pose.theta)
        if abs(herr) <= cfg.goal_tol_theta:
            return FollowResult(DriveCmdLike(), done=True)
        omega = max(-MAX_OMEGA, min(MAX_OMEGA, cfg.k_omega * herr))
        return FollowResult(DriveCmdLike(0.0, omega))

    near_i, near_d = _nearest_on_path(plan, pose)
    if near_d > cfg.replan_threshold:
        raise PathStale(f"{near_d:.3f} m from path (> {cfg.replan_threshold} m)")

    # lookahead point: first waypoint at least `lookahead` beyond the projection
    target = plan.waypoints[-1]
    acc = 0.0
    for i in range(near_i, len(plan.waypoints) - 1):
        acc += plan.waypoints[i].distance_to(plan.waypoints[i + 1])
        if acc >= cfg.lookahead:
            target = plan.waypoints[i + 1]
            break

    alpha = wrap_angle(pose.heading_to(target) - pose.theta)
    if abs(alpha) > cfg.align_tolerance:
        # rotate in place until roughly aligned; translating while misaligned
        # walks the footprint off the planned corridor in tight spaces
        return FollowResult(DriveCmdLike(0.0, max(-MAX_OMEGA, min(MAX_OMEGA, cfg.k_omega * alpha))))
    v = MAX_SPEED * min(1.0, dist_goal / cfg.slow_radius)
    v = max(0.05, v)
    ld = max(cfg.lookahead, 1e-6)
    omega = 2.0 * v * math.sin(alpha) / ld
    omega = max(-MAX_OMEGA, min(MAX_OMEGA, omega))
    v = min(v, MAX_SPEED)
    return FollowResult(DriveCmdLike(v, omega))


def safety_gate(cmd, bumpers, proximity_ring, floor_sensors,
                scale_zone: float = 1.0,
                stop_distance: float = 0.3) -> tuple[DriveCmdLike, list[str]]:
    """Reflex layer between any commander and the platform.

    Bumper contact zeroes the command; a floor edge on the leading side zeroes
    forward/backward speed (rotation stays allowed); near obstacles cap the
    speed linearly with distance and stop it entirely inside stop_distance.
    Idempotent: gating a gated command changes nothing.
    """
    events: list[str] = []
    v, omega = float(cmd.v), float(cmd.omega)

    if any(bumpers):
        if abs(v) > 0 or abs(omega) > 0:
            events.append("stop:bumper")
        return DriveCmdLike(0.0, 0.0), events

    fs = list(floor_sensors)
    if v > 0 and (fs[0] or fs[1]):       # leading corners when driving forward
        v = 0.0
        events.append("stop:edge")
    elif v < 0 and (fs[2] or fs[3]):
        v = 0.0
        events.append("stop:edge")

    ring = np.asarray(proximity_ring, dtype=float)
    if ring.size and v != 0.0:
        n = ring.size
        if v > 0:
            front = min(ring[0], ring[n - 1])
        else:
            front = min(ring[n // 2 - 1], ring[n // 2])
        if front <= stop_distance:
            v = 0.0
            events.append("stop:proximity")
        elif front < scale_zone:
            cap = MAX_SPEED * max(0.0, front / scale_zone)
            if abs(v) > cap:
                v = math.copysign(cap, v)
                events.append("slow:proximity")

    omega = max(-MAX_OMEGA, min(MAX_OMEGA, omega))
    v = max(-MAX_SPEED, min(MAX_SPEED, v))
    return DriveCmdLike(v, omega), events
