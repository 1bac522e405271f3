"""Stack wiring: the world, navigation, arm simulation, executive and bus
composed into one tick-driven application.

Two motion profiles share all decision logic:
  drive - full 20 Hz closed loop (pure pursuit + safety gate against the sim)
  glide - headless acceleration: the pose advances along the planned path
          analytically, used by the scenario runner for multi-day runs
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .executive.arbiter import Executive, ExecutiveConfig
from .executive.calendar import CalendarStore
from .executive.facts import build_facts
from .executive.metrics import MetricsLedger
from .geometry import Pose2D, wrap_angle
from .manipulation import ArmModel, ToolPose, fk, plan_trajectory
from .nav.costmap import CostmapStack
from .nav.follow import FollowConfig, PathStale, follow_path, safety_gate
from .nav.mapping import OccupancyGrid
from .nav.planner import NoPath, PathPlan, StartBlocked, plan_path
from .rules.engine import RuleBase
from .simworld.world import SIM_DT, DriveCmd, FacilityWorld, step

GLIDE_DT = 0.5
GLIDE_SPEED = 1.0
TELEOP_TTL = 0.5                # deadman renewal period


@dataclass
class FailurePlan:
    """Injectable failures for tests and the scenario runner."""

    fail_next_grasps: int = 0
    block_handover: bool = False
    arm_obstructed_until: float = -1.0      # sim time until which arm motion is blocked
    fail_next_nav: int = 0


@dataclass
class _NavState:
    plan: PathPlan | None = None
    status: str = "idle"                    # idle | running | done | failed
    reason: str | None = None
    paused: bool = False
    blocked_since: float | None = None
    replans: int = 0
    glide_s: float = 0.0


@dataclass
class _ArmState:
    op: str | None = None
    ends_at: float = 0.0
    meta: dict = field(default_factory=dict)
    status: str = "idle"                    # idle | running | done | failed
    reason: str | None = None
    retries: int = 0
    paused_at: float | None = None


class SimOps:
    """The robot-operations facade skills and the executive talk to."""

    def __init__(self, world: FacilityWorld, costmap: CostmapStack,
                 motion: str = "drive", emit_fn=None,
                 arm_collision_policy: str = "pause_resume"):
        self.world = world
        self.costmap = costmap
        self.motion = motion
        self.emit_fn = emit_fn or (lambda topic, payload: None)
        self.failures = FailurePlan()
        self.nav = _NavState()
        self.arm = _ArmState()
        self.arm_model = ArmModel()
        self.arm_collision_policy = arm_collision_policy
        self.follow_cfg = FollowConfig()
        self.holder_placed_flag = False
        self.marker_noise = 0.0          # camera pose noise fed to marker fixes
        self.active_category = "other"
        self.ledger: MetricsLedger | None = None
        self.teleop_cmd = DriveCmd()
        self.teleop_deadline = -1.0
        self._held: str | None = None
        self._offer_since: float | None = None
        self._door_arc_duration: float | None = None

    # -- basics --------------------------------------------------------------

    def clock(self) -> float:
        return self.world.clock

    def battery(self) -> float:
        return self.world.robot.battery

    def docked(self) -> bool:
        return self.world.robot.docked

    def robot_pose(self) -> Pose2D:
        return self.world.robot.pose

    def dock_pose(self) -> Pose2D:
        return self.world.dock

    def latch_dock(self) -> None:
        self.world.robot.docked = True
        self.world.robot.v = self.world.robot.omega = 0.0

    def emit(self, topic: str, payload: dict) -> None:
        self.emit_fn(topic, payload)

    def say(self, text: str) -> None:
        self.emit("speech/transcript", {"text": text})

    def set_warning(self, on: bool) -> None:
        self.world.robot.warning = on

    def set_active_category(self, category: str) -> None:
        self.active_category = category

    def holder_placed(self) -> bool:
        return self.holder_placed_flag

    # -- rooms / people / inventory -------------------------------------------

    def room_pose(self, name: str) -> Pose2D | None:
        return self.world.rooms.get(name)

    def person_pose(self, name: str) -> Pose2D | None:
        for p in self.world.people:
            if p.name == name:
                return p.pose
        return None

    def person_near(self, radius: float) -> bool:
        return self.world.nearest_person_distance() <= radius

    def ask_person_to_clear(self) -> None:
        rp = self.world.robot.pose
        people = sorted(self.world.people,
                        key=lambda p: math.hypot(p.pose.x - rp.x, p.pose.y - rp.y))
        for p in people:
            if p.retreat is not None:
                p.asked_to_move = True
                break

    def offer_object(self) -> None:
        self._offer_since = self.clock()

    def person_took_object(self) -> bool:
        if self._offer_since is None or self._held is None:
            return False
        if self.failures.block_handover:
            return False
        if self.clock() - self._offer_since < 2.0:
            return False
        rp = self.world.robot.pose
        return any(math.hypot(p.pose.x - rp.x, p.pose.y - rp.y) < 1.5
                   for p in self.world.people)

    def holding(self) -> str | None:
        return self._held

    def set_holding(self, item: str | None) -> None:
        self._held = item

    def slot_with_item(self, item: str, skip: set[str]):
        slot = self.world.slot_with_item(item, skip=skip)
        return slot.name if slot else None

    def marker_near(self, kind: str, max_dist: float):
        rp = self.world.robot.pose
        best = None
        best_d = max_dist
        for m in self.world.markers:
            if m.kind != kind:
                continue
            d = math.hypot(m.pose.x - rp.x, m.pose.y - rp.y)
            if d <= best_d:
                best, best_d = m.marker_id, d
        return best

    def localize_marker(self, kind: str, max_dist: float):
        """Camera-based marker fix: (id, estimated handle pose in the map)."""
        from .perception.markers import detect_markers

        rp = self.world.robot.pose
        best = None
        best_d = max_dist
        for obs in detect_markers(self.world, noise_sigma=self.marker_noise,
                                  rng=self.world.rng):
            marker = next((m for m in self.world.markers
                           if m.marker_id == obs.marker_id), None)
            if marker is None or marker.kind != kind:
                continue
            wx, wy = rp.transform_point(float(obs.pose_cam[0]), float(obs.pose_cam[1]))
            d = math.hypot(wx - rp.x, wy - rp.y)
            if d <= best_d:
                best = (obs.marker_id, Pose2D(wx, wy, rp.theta + float(obs.pose_cam[5])))
                best_d = d
        return best

    def open_door_at(self, marker_id: int, handle_estimate: Pose2D) -> bool:
        """A door opens only when the commanded handle pose lands within 5 cm
        of its true marker pose (kinematic contact simplification)."""
        for d in self.world.doors:
            if d.marker_id != marker_id:
                continue
            marker = next((m for m in self.world.markers
                           if m.marker_id == marker_id), None)
            if marker is None:
                return False
            err = math.hypot(marker.pose.x - handle_estimate.x,
                             marker.pose.y - handle_estimate.y)
            if err <= 0.05:
                d.open = True
                self.world._occ_cache = None
                self.refresh_costmap()
                return True
            return False
        return False

    def refresh_costmap(self) -> None:
        """Rebuild the planning base from effective occupancy (doors included)."""
        self.costmap.base = OccupancyGrid.from_bool(self.world.effective_occupancy(),
                                                    self.world.grid.resolution)
        self.costmap.invalidate()

    def set_door_near(self, open: bool) -> None:
        rp = self.world.robot.pose
        for d in self.world.doors:
            if math.hypot(d.pose.x - rp.x, d.pose.y - rp.y) <= 2.0:
                d.open = open
                self.world._occ_cache = None
                self.refresh_costmap()
                break

    def door_arc_duration(self) -> float:
        """Duration of the door-handle tool-space arc, planned once."""
        if self._door_arc_duration is None:
            q0 = np.array([0.0, -0.4, 0.9, 0.0, 0.4, 0.0])
            start = fk(self.arm_model, q0)
            goal = ToolPose(position=start.position + np.array([0.0, 0.10, 0.05]),
                            orientation=start.orientation)
            traj = plan_trajectory(self.arm_model, q0, goal, space="tool")
            self._door_arc_duration = max(1.0, traj.duration)
        return self._door_arc_duration

    # -- teleop ----------------------------------------------------------------

    def set_teleop(self, v: float, omega: float) -> None:
        self.teleop_cmd = DriveCmd(v, omega)
        self.teleop_deadline = self.clock() + TELEOP_TTL

    def teleop_active(self) -> bool:
        return self.clock() < self.teleop_deadline

    # -- navigation --------------------------------------------------------------

    def nav_start(self, goal: Pose2D, category: str = "other",
                  standoff: float = 0.0) -> None:
        self.active_category = category
        if standoff > 0.0:
            rp = self.world.robot.pose
            d = math.hypot(goal.x - rp.x, goal.y - rp.y)
            if d > standoff:
                f = (d - standoff) / d
                goal = Pose2D(rp.x + (goal.x - rp.x) * f, rp.y + (goal.y - rp.y) * f,
                              math.atan2(goal.y - rp.y, goal.x - rp.x))
        if self.failures.fail_next_nav > 0:
            self.failures.fail_next_nav -= 1
            self.nav = _NavState(status="failed", reason="no_path")
            return
        try:
            plan = plan_path(self.costmap, self.world.robot.pose, goal,
                             at_time=self.world.clock)
        except NoPath:
            self.nav = _NavState(status="failed", reason="no_path")
            return
        self.nav = _NavState(plan=plan, status="running")

    def nav_status(self) -> tuple[str, str | None]:
        return self.nav.status, self.nav.reason

    def nav_cancel(self) -> None:
        self.nav = _NavState()

    def nav_pause(self) -> None:
        self.nav.paused = True

    def nav_resume(self) -> None:
        self.nav.paused = False

    def nav_blocked_for(self) -> float:
        if self.nav.blocked_since is None:
            return 0.0
        return self.clock() - self.nav.blocked_since

    def _replan(self) -> None:
        if self.nav.plan is None:
            return
        goal = self.nav.plan.goal()
        self.nav.replans += 1
        if self.nav.replans > 5:
            self.nav.status, self.nav.reason = "failed", "no_path"
            return
        pose = self.world.robot.pose
        try:
            self.nav.plan = plan_path(self.costmap, pose, goal,
                                      at_time=self.world.clock)
            self.nav.glide_s = 0.0
        except StartBlocked:
            # physically fine but inside an inflated cell: plan from the
            # nearest free cell and prepend the current pose as an escape leg
            free = self._nearest_free(pose)
            if free is None:
                self.nav.status, self.nav.reason = "failed", "no_path"
                return
            try:
                plan = plan_path(self.costmap, free, goal, at_time=self.world.clock)
            except NoPath:
                self.nav.status, self.nav.reason = "failed", "no_path"
                return
            plan.waypoints.insert(0, Pose2D(pose.x, pose.y,
                                            pose.heading_to(plan.waypoints[0])))
            self.nav.plan = plan
            self.nav.glide_s = 0.0
        except NoPath:
            self.nav.status, self.nav.reason = "failed", "no_path"

    def _nearest_free(self, pose: Pose2D) -> Pose2D | None:
        blocked = self.costmap.blocked_mask(self.world.clock)
        grid = self.costmap.base
        ix, iy = grid.cell_of(pose.x, pose.y)
        best = None
        best_d = 1e9
        r = int(0.9 / grid.resolution)
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                x2, y2 = ix + dx, iy + dy
                if not grid.in_bounds_cell(x2, y2) or blocked[y2, x2]:
                    continue
                d = dx * dx + dy * dy
                if d < best_d:
                    best_d = d
                    best = (x2, y2)
        if best is None:
            return None
        cx, cy = grid.center_of(*best)
        return Pose2D(cx, cy, pose.theta)

    # -- arm simulation --------------------------------------------------------

    def arm_start(self, op: str, duration_s: float, meta: dict) -> None:
        self.arm = _ArmState(op=op, ends_at=self.clock() + duration_s, meta=meta,
                             status="running")

    def arm_status(self) -> tuple[str, str | None]:
        return self.arm.status, self.arm.reason

    def arm_cancel(self) -> None:
        self.arm = _ArmState()

    def _arm_finish(self) -> None:
        op = self.arm.op
        meta = self.arm.meta
        self.arm.status = "done"
        if op == "grasp_slot":
            if self.failures.fail_next_grasps > 0:
                self.failures.fail_next_grasps -= 1
                return                      # sanity check fails: hand stays empty
            for slot in self.world.inventory:
                if slot.name == meta.get("slot"):
                    self._held = slot.item
                    slot.item = None
                    return
        elif op == "stow":
            if self._held is not None:
                slot = self.world.free_slot()
                if slot is not None:
                    slot.item = self._held
                self._held = None
        elif op == "load":
            if self.failures.fail_next_grasps > 0:
                self.failures.fail_next_grasps -= 1
                self.arm.status, self.arm.reason = "failed", "grasp_failed"
                return
            slot = self.world.free_slot()
            if slot is not None:
                slot.item = meta.get("item")
        elif op == "unload":
            for slot in self.world.inventory:
                if slot.item == meta.get("item"):
                    slot.item = None
                    break

    def _arm_tick(self) -> None:
        if self.arm.status != "running":
            return
        now = self.clock()
        obstructed = now < self.failures.arm_obstructed_until
        if obstructed:
            if self.arm_collision_policy == "fail_skill":
                self.arm.status, self.arm.reason = "failed", "collision"
                self.emit("arm/collision", {"policy": "fail_skill"})
                return
            # pause_resume: hold position, retry after a debounce
            if self.arm.paused_at is None:
                self.arm.paused_at = now
                self.emit("arm/collision", {"policy": "pause_resume",
                                            "retry": self.arm.retries})
            elif now - self.arm.paused_at >= 0.5:
                self.arm.retries += 1
                self.arm.paused_at = None
                if self.arm.retries >= 3:
                    self.arm.status, self.arm.reason = "failed", "collision"
                    return
            self.arm.ends_at += SIM_DT if self.motion == "drive" else GLIDE_DT
            return
        if self.arm.paused_at is not None:
            self.arm.paused_at = None
        if now >= self.arm.ends_at:
            self._arm_finish()

    # -- world advancement --------------------------------------------------------

    def world_tick(self) -> None:
        if self.motion == "drive":
            self._drive_tick()
        else:
            self._glide_tick()
        self._arm_tick()

    def _drive_cmd(self) -> DriveCmd:
        if self.teleop_active():
            return DriveCmd(self.teleop_cmd.v, self.teleop_cmd.omega)
        n = self.nav
        if n.status != "running" or n.paused or n.plan is None:
            return DriveCmd()
        try:
            res = follow_path(n.plan, self.world.robot.pose, SIM_DT, self.follow_cfg)
        except PathStale:
            self._replan()
            return DriveCmd()
        if res.done:
            n.status = "done"
            return DriveCmd()
        return DriveCmd(res.cmd.v, res.cmd.omega)

    def _drive_tick(self) -> None:
        want = self._drive_cmd()
        ring = self.world.proximity_ring() if abs(want.v) > 1e-9 else np.full(12, 2.0)
        gated, events = safety_gate(want, self.world.robot.bumpers, ring,
                                    self.world.robot.floor_sensors)
        for e in events:
            self.emit("nav/safety", {"event": e})
        pose_before = self.world.robot.pose
        step(self.world, DriveCmd(gated.v, gated.omega), SIM_DT)
        moved = self.world.robot.pose.distance_to(pose_before)
        if self.ledger is not None and moved > 0:
            self.ledger.add_distance(self.active_category, moved)
        # blocked-progress tracking for the ask-for-help ladder: wants to move
        # forward but makes essentially no progress (gate stop or contact)
        if self.nav.status == "running" and not self.nav.paused:
            if abs(want.v) > 0.02 and moved < 1e-4:
                if self.nav.blocked_since is None:
                    self.nav.blocked_since = self.clock()
            else:
                self.nav.blocked_since = None

    def _glide_tick(self) -> None:
        w = self.world
        n = self.nav
        if n.status == "running" and not n.paused and n.plan is not None \
                and not w.robot.estop:
            n.glide_s += GLIDE_SPEED * GLIDE_DT
            pose, remaining = _pose_along(n.plan, n.glide_s)
            moved = pose.distance_to(w.robot.pose)
            w.robot.pose = pose
            w.odometer += moved
            w.robot.docked = False
            if self.ledger is not None and moved > 0:
                self.ledger.add_distance(self.active_category, moved)
            if remaining <= 0.0:
                n.status = "done"
            driving = True
        else:
            driving = False
        from .simworld.world import battery_tick
        w.robot.battery = battery_tick(w.robot.battery, GLIDE_DT, driving=driving,
                                       docked=w.robot.docked, cfg=w.battery_config)
        w.clock += GLIDE_DT


def _pose_along(plan: PathPlan, s: float) -> tuple[Pose2D, float]:
    """Pose at arc length s along the plan and the distance still to go."""
    remaining = s
    wps = plan.waypoints
    for i in range(len(wps) - 1):
        seg = wps[i].distance_to(wps[i + 1])
        if remaining <= seg and seg > 0:
            f = remaining / seg
            x = wps[i].x + (wps[i + 1].x - wps[i].x) * f
            y = wps[i].y + (wps[i + 1].y - wps[i].y) * f
            return Pose2D(x, y, wps[i].theta), plan.length - s
        remaining -= seg
    return wps[-1], 0.0


class Stack:
    """World + ops + executive stepped together on the logical clock."""

    def __init__(self, world: FacilityWorld, rulebase: RuleBase | None = None,
                 calendar: CalendarStore | None = None, motion: str = "drive",
                 emit_fn=None, config: ExecutiveConfig | None = None):
        self.world = world
        base = OccupancyGrid.from_bool(world.effective_occupancy(),
                                       world.grid.resolution)
        self.costmap = CostmapStack(base)
        self.ops = SimOps(world, self.costmap, motion=motion, emit_fn=emit_fn,
                          arm_collision_policy=(config or ExecutiveConfig()).arm_collision_policy)
        self.ledger = MetricsLedger()
        self.ops.ledger = self.ledger
        self.executive = Executive(self.ops, rulebase=rulebase, calendar=calendar,
                                   config=config, ledger=self.ledger)
        self.executive.last_calendar_tick = world.clock

    @property
    def tick_dt(self) -> float:
        return SIM_DT if self.ops.motion == "drive" else GLIDE_DT

    def tick(self) -> None:
        self.ops.world_tick()
        now = self.world.clock
        if now - self.executive.last_decision >= self.executive.config.decision_period - 1e-9:
            facts = build_facts(self.world,
                                running_skill=(self.executive.running.name
                                               if self.executive.running and
                                               self.executive.running.running else None),
                                holder_placed=self.ops.holder_placed_flag)
            self.executive.tick(facts)
        else:
            self.executive.tick(None)
        self.ledger.uptime_s = now

    def run_for(self, sim_seconds: float) -> None:
        end = self.world.clock + sim_seconds
        while self.world.clock < end - 1e-9:
            self.tick()

    def run_until(self, predicate, timeout_s: float) -> bool:
        end = self.world.clock + timeout_s
        while self.world.clock < end:
            self.tick()
            if predicate():
                return True
        return False
