"""Skill state machines.

Every skill is a named state machine stepped at the decision rate. States
are methods (state_<name>); NON_INTERRUPTIBLE lists states where preemption
is deferred; begin_preempt routes through the skill's cleanup so nothing is
ever left held in a terminal state.

Machine-readable failure reasons: no_path, grasp_failed, handover_timeout,
holder_missing, marker_not_found, node_down, collision.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..rules.terms import Atom, Struct, Term
from .requests import ActionRequest, UnknownAction

ASK_FOR_HELP_AFTER = 5.0        # seconds of blocked navigation
ASK_FOR_HELP_TIMEOUT = 30.0
HANDOVER_TIMEOUT = 30.0
WARNING_RADIUS = 1.5            # UV-C person warning distance, meters


@dataclass
class SkillOutcome:
    status: str                  # success | failed | preempted
    reason: str | None = None


class Skill:
    name = "skill"
    category = "other"           # km accounting bucket
    NON_INTERRUPTIBLE: frozenset[str] = frozenset()

    def __init__(self, request: ActionRequest):
        self.request = request
        self.state = "start"
        self.state_since: float | None = None
        self.outcome: SkillOutcome | None = None
        self.preempting = False
        self.ctx: dict = {}

    # -- lifecycle ---------------------------------------------------------

    @property
    def running(self) -> bool:
        return self.outcome is None

    def interruptible_now(self) -> bool:
        return self.state not in self.NON_INTERRUPTIBLE

    def goto(self, state: str, ops) -> None:
        self.state = state
        self.state_since = ops.clock()
        ops.emit("skill/events", {"skill": self.name, "state": state})

    def in_state_for(self, ops) -> float:
        return ops.clock() - (self.state_since if self.state_since is not None
                              else ops.clock())

    def succeed(self, ops) -> None:
        self.outcome = SkillOutcome("success")
        ops.emit("skill/events", {"skill": self.name, "state": "success"})

    def fail(self, ops, reason: str) -> None:
        self.outcome = SkillOutcome("failed", reason)
        ops.emit("skill/events", {"skill": self.name, "state": "failed",
                                  "reason": reason})

    def finish_preempt(self, ops) -> None:
        self.outcome = SkillOutcome("preempted")
        ops.emit("skill/events", {"skill": self.name, "state": "preempted"})

    def begin_preempt(self, ops) -> None:
        """Route to cleanup; default cleanup just cancels active operations."""
        self.preempting = True
        ops.nav_cancel()
        ops.arm_cancel()
        self.goto("cleanup", ops)

    def state_cleanup(self, ops) -> None:
        self.finish_preempt(ops)

    def step(self, ops) -> None:
        if not self.running:
            return
        if self.state_since is None:
            self.state_since = ops.clock()
        handler = getattr(self, f"state_{self.state}", None)
        if handler is None:
            self.fail(ops, f"bad_state:{self.state}")
            return
        handler(ops)

    # -- shared sub-behaviors -----------------------------------------------

    def _nav_fail(self, ops, reason: str) -> None:
        """Hook for skills that must clean up before failing a nav leg."""
        self.fail(ops, reason)

    def drive_leg(self, ops, done_state: str) -> None:
        """Common nav-leg handling: completion, failure, blocked-path help."""
        status, reason = ops.nav_status()
        if status == "done":
            self.goto(done_state, ops)
        elif status == "failed":
            self._nav_fail(ops, reason or "no_path")
        elif ops.nav_blocked_for() > ASK_FOR_HELP_AFTER:
            ops.emit("skill/help", {"skill": self.name, "reason": "path_blocked"})
            ops.say("Could you help me? My path is blocked.")
            ops.ask_person_to_clear()
            self.ctx["_drive_state"] = self.state
            self.ctx["_after_drive"] = done_state
            self.goto("awaiting_help", ops)

    def state_awaiting_help(self, ops) -> None:
        status, reason = ops.nav_status()
        if status == "done":
            self.goto(self.ctx.get("_after_drive", "start"), ops)
        elif status == "failed":
            self._nav_fail(ops, reason or "no_path")
        elif ops.nav_blocked_for() == 0.0:
            self.goto(self.ctx.get("_drive_state", "start"), ops)   # path cleared
        elif self.in_state_for(ops) > ASK_FOR_HELP_TIMEOUT:
            ops.nav_cancel()
            self._nav_fail(ops, "no_path")


class ChargeSkill(Skill):
    name = "charge"

    def state_start(self, ops) -> None:
        if ops.docked():
            self.succeed(ops)
            return
        ops.nav_start(ops.dock_pose(), category=self.category)
        self.goto("driving", ops)

    def state_driving(self, ops) -> None:
        status, reason = ops.nav_status()
        if status == "done":
            ops.latch_dock()
            self.succeed(ops)
        elif status == "failed":
            self.fail(ops, reason or "no_path")


class DeliverSkill(Skill):
    name = "deliver"
    category = "delivery"
    NON_INTERRUPTIBLE = frozenset({"loading", "unloading"})

    def state_start(self, ops) -> None:
        src = ops.room_pose(str(self.request.args()[0]))
        if src is None:
            self.fail(ops, "no_path")
            return
        ops.nav_start(src, category=self.category)
        self.goto("to_pickup", ops)

    def state_to_pickup(self, ops) -> None:
        self.drive_leg(ops, "load")

    def state_load(self, ops) -> None:
        ops.arm_start("load", 2.0, {"item": str(self.request.args()[2])})
        self.goto("loading", ops)

    def state_loading(self, ops) -> None:
        status, reason = ops.arm_status()
        if status == "done":
            dst = ops.room_pose(str(self.request.args()[1]))
            if dst is None:
                self.fail(ops, "no_path")
                return
            ops.nav_start(dst, category=self.category)
            self.goto("to_dropoff", ops)
        elif status == "failed":
            self.fail(ops, reason or "grasp_failed")

    def state_to_dropoff(self, ops) -> None:
        self.drive_leg(ops, "unload")

    def state_unload(self, ops) -> None:
        ops.arm_start("unload", 2.0, {"item": str(self.request.args()[2])})
        self.goto("unloading", ops)

    def state_unloading(self, ops) -> None:
        status, reason = ops.arm_status()
        if status == "done":
            self.succeed(ops)
        elif status == "failed":
            self.fail(ops, reason or "grasp_failed")


class BringItemSkill(Skill):
    """Bring an inventory item to a person, with the layered recovery ladder:
    blocked path asks for help; a failed grasp sanity check retries the same
    motion once, then an alternative inventory slot; an ignored handover
    returns the object to the inventory."""

    name = "bring_item"
    category = "delivery"
    NON_INTERRUPTIBLE = frozenset({"grasping", "stowing"})

    def state_start(self, ops) -> None:
        item = str(self.request.args()[1])
        slot = ops.slot_with_item(item, skip=set())
        if slot is None:
            self.fail(ops, "grasp_failed")
            return
        self.ctx.update({"item": item, "slot": slot, "tried_slots": set(),
                         "attempts": 0})
        self._grasp(ops)

    def _grasp(self, ops) -> None:
        self.ctx["attempts"] += 1
        ops.arm_start("grasp_slot", 2.0, {"slot": self.ctx["slot"],
                                          "item": self.ctx["item"]})
        self.goto("grasping", ops)

    def state_grasping(self, ops) -> None:
        status, reason = ops.arm_status()
        if status == "running":
            return
        if status == "done" and ops.holding() == self.ctx["item"]:
            person = str(self.request.args()[0])
            target = ops.person_pose(person)
            if target is None:
                self._stow_then_fail(ops, "no_path")
                return
            ops.nav_start(target, category=self.category, standoff=0.6)
            self.goto("driving", ops)
            return
        # grasp sanity check failed: same slot once, then an alternative slot
        self.ctx["tried_slots"].add(self.ctx["slot"])
        if self.ctx["attempts"] == 1:
            self._grasp(ops)
            return
        alt = ops.slot_with_item(self.ctx["item"], skip=self.ctx["tried_slots"])
        if alt is not None and self.ctx["attempts"] < 3:
            self.ctx["slot"] = alt
            self._grasp(ops)
            return
        self.fail(ops, "grasp_failed")

    def state_driving(self, ops) -> None:
        self.drive_leg(ops, "handover")

    def _nav_fail(self, ops, reason: str) -> None:
        self._stow_then_fail(ops, reason)

    def state_handover(self, ops) -> None:
        ops.offer_object()
        self.goto("awaiting_take", ops)

    def state_awaiting_take(self, ops) -> None:
        if ops.person_took_object():
            ops.set_holding(None)
            self.succeed(ops)
        elif self.in_state_for(ops) > HANDOVER_TIMEOUT:
            self._stow_then_fail(ops, "handover_timeout")

    def _stow_then_fail(self, ops, reason: str) -> None:
        self.ctx["fail_reason"] = reason
        if ops.holding() is not None:
            ops.arm_start("stow", 2.0, {"item": self.ctx.get("item")})
            self.goto("stowing", ops)
        else:
            self.fail(ops, reason)

    def state_stowing(self, ops) -> None:
        status, _ = ops.arm_status()
        if status == "running":
            return
        if self.preempting:
            self.finish_preempt(ops)
        else:
            self.fail(ops, self.ctx.get("fail_reason", "grasp_failed"))

    def begin_preempt(self, ops) -> None:
        self.preempting = True
        ops.nav_cancel()
        ops.arm_cancel()
        if ops.holding() is not None:
            # place the object back into the inventory before handing over
            ops.arm_start("stow", 2.0, {"item": self.ctx.get("item")})
            self.goto("stowing", ops)
        else:
            self.goto("cleanup", ops)


class RemindSkill(Skill):
    """Door-sequence reminder: knock, localize the handle marker, open with a
    tool-space arc, announce, close."""

    name = "remind"
    NON_INTERRUPTIBLE = frozenset({"opening", "closing"})

    def state_start(self, ops) -> None:
        room = ops.room_pose(str(self.request.args()[0]))
        if room is None:
            self.fail(ops, "no_path")
            return
        ops.nav_start(room, category=self.category)
        self.goto("driving", ops)

    def state_driving(self, ops) -> None:
        self.drive_leg(ops, "knock")

    def state_knock(self, ops) -> None:
        ops.arm_start("knock", 1.0, {})
        self.goto("knocking", ops)

    def state_knocking(self, ops) -> None:
        status, _ = ops.arm_status()
        if status == "done":
            fix = ops.localize_marker(kind="door_handle", max_dist=1.5)
            if fix is None:
                self.fail(ops, "marker_not_found")
                return
            self.ctx["marker_id"], self.ctx["handle_pose"] = fix
            ops.arm_start("open_door", ops.door_arc_duration(),
                          {"marker": self.ctx["marker_id"]})
            self.goto("opening", ops)
        elif status == "failed":
            self.fail(ops, "collision")

    def state_opening(self, ops) -> None:
        status, reason = ops.arm_status()
        if status == "done":
            if not ops.open_door_at(self.ctx["marker_id"], self.ctx["handle_pose"]):
                self.fail(ops, "marker_not_found")
                return
            ops.say(str(self.request.args()[1]) if len(self.request.args()) > 1
                    else "You have an appointment coming up.")
            self.goto("announcing", ops)
        elif status == "failed":
            self.fail(ops, reason or "collision")

    def state_announcing(self, ops) -> None:
        if self.in_state_for(ops) >= 2.0:
            ops.arm_start("close_door", ops.door_arc_duration(), {})
            self.goto("closing", ops)

    def state_closing(self, ops) -> None:
        status, reason = ops.arm_status()
        if status == "done":
            ops.set_door_near(open=False)
            self.succeed(ops)
        elif status == "failed":
            self.fail(ops, reason or "collision")


class UvcDisinfectSkill(Skill):
    """Drive to each marked target and hold the UV-C light over it; pauses
    with LED and verbal warnings whenever a person comes close."""

    name = "uvc_disinfect"
    NON_INTERRUPTIBLE = frozenset({"grasp_wand", "stow_wand"})
    SHINE_S = 5.0

    def state_start(self, ops) -> None:
        if not ops.holder_placed():
            ops.emit("skill/help", {"skill": self.name, "reason": "holder_missing"})
            self.fail(ops, "holder_missing")
            return
        self.ctx["targets"] = [str(a) for a in self.request.args()]
        self.ctx["index"] = 0
        ops.arm_start("grasp_wand", 2.0, {})
        self.goto("grasp_wand", ops)

    def state_grasp_wand(self, ops) -> None:
        status, reason = ops.arm_status()
        if status == "done":
            ops.set_holding("uvc_wand")
            self._next_target(ops)
        elif status == "failed":
            self.fail(ops, reason or "grasp_failed")

    def _next_target(self, ops) -> None:
        idx = self.ctx["index"]
        if idx >= len(self.ctx["targets"]):
            ops.arm_start("stow_wand", 2.0, {})
            self.goto("stow_wand", ops)
            return
        pose = ops.room_pose(self.ctx["targets"][idx])
        if pose is None:
            self.fail(ops, "no_path")
            return
        ops.nav_start(pose, category=self.category)
        self.goto("driving", ops)

    def state_driving(self, ops) -> None:
        if self._person_pause(ops):
            return
        self.drive_leg(ops, "localize")

    def state_localize(self, ops) -> None:
        marker = ops.marker_near(kind="disinfect", max_dist=1.5)
        if marker is None:
            self.fail(ops, "marker_not_found")
            return
        self.goto("shining", ops)

    def state_shining(self, ops) -> None:
        if self._person_pause(ops):
            return
        if self.in_state_for(ops) >= self.SHINE_S:
            ops.emit("skill/events", {"skill": self.name, "state": "target_done",
                                      "target": self.ctx["targets"][self.ctx["index"]]})
            self.ctx["index"] += 1
            self._next_target(ops)

    def _person_pause(self, ops) -> bool:
        if ops.person_near(WARNING_RADIUS):
            if self.state != "paused":
                self.ctx["resume_state"] = self.state
                ops.nav_pause()
                ops.set_warning(True)
                ops.say("Warning: ultraviolet disinfection in progress, please step back.")
                ops.emit("skill/warning", {"skill": self.name, "reason": "person_near"})
                self.goto("paused", ops)
            return True
        return False

    def state_paused(self, ops) -> None:
        if not ops.person_near(WARNING_RADIUS):
            ops.set_warning(False)
            ops.nav_resume()
            self.goto(self.ctx.get("resume_state", "driving"), ops)

    def state_stow_wand(self, ops) -> None:
        status, reason = ops.arm_status()
        if status == "done":
            ops.set_holding(None)
            ops.set_warning(False)
            self.succeed(ops)
        elif status == "failed":
            self.fail(ops, reason or "grasp_failed")

    def begin_preempt(self, ops) -> None:
        self.preempting = True
        ops.nav_cancel()
        ops.set_warning(False)
        if ops.holding() == "uvc_wand":
            ops.arm_cancel()
            ops.arm_start("stow_wand", 2.0, {})
            self.goto("cleanup_stow", ops)
        else:
            ops.arm_cancel()
            self.goto("cleanup", ops)

    def state_cleanup_stow(self, ops) -> None:
        status, _ = ops.arm_status()
        if status != "running":
            ops.set_holding(None)
            self.finish_preempt(ops)


class TakeMenuOrdersSkill(Skill):
    name = "take_menu_orders"

    def state_start(self, ops) -> None:
        self.ctx["rooms"] = [str(a) for a in self.request.args()]
        self.ctx["index"] = 0
        self.ctx["orders"] = []
        self._next_room(ops)

    def _next_room(self, ops) -> None:
        idx = self.ctx["index"]
        if idx >= len(self.ctx["rooms"]):
            ops.emit("catering/orders", {"orders": self.ctx["orders"]})
            self.succeed(ops)
            return
        pose = ops.room_pose(self.ctx["rooms"][idx])
        if pose is None:
            self.fail(ops, "no_path")
            return
        ops.nav_start(pose, category=self.category)
        self.goto("driving", ops)

    def state_driving(self, ops) -> None:
        self.drive_leg(ops, "asking")

    def state_asking(self, ops) -> None:
        if self.in_state_for(ops) >= 2.0:
            room = self.ctx["rooms"][self.ctx["index"]]
            self.ctx["orders"].append({"room": room, "order": "menu_a"})
            self.ctx["index"] += 1
            self._next_room(ops)


class EntertainSkill(Skill):
    """Drive out, perform, and return to the standby pose; the whole round
    trip is entertainment distance."""

    name = "entertain"
    category = "entertainment"
    PERFORM_S = 60.0

    def state_start(self, ops) -> None:
        pose = ops.room_pose(str(self.request.args()[0])) if self.request.args() \
            else ops.robot_pose()
        if pose is None:
            self.fail(ops, "no_path")
            return
        self.ctx["home"] = ops.robot_pose()
        ops.nav_start(pose, category=self.category)
        self.goto("driving", ops)

    def state_driving(self, ops) -> None:
        self.drive_leg(ops, "performing")

    def state_performing(self, ops) -> None:
        if self.in_state_for(ops) >= self.ctx.get("duration", self.PERFORM_S):
            home = self.ctx.get("home")
            if home is None:
                self.succeed(ops)
                return
            ops.nav_start(home, category=self.category)
            self.goto("returning", ops)

    def state_returning(self, ops) -> None:
        self.drive_leg(ops, "done")

    def state_done(self, ops) -> None:
        self.succeed(ops)


class GotoSkill(Skill):
    """Drive to a map coordinate (the console's click-to-drive)."""

    name = "goto"

    def state_start(self, ops) -> None:
        args = self.request.args()
        if len(args) < 2:
            self.fail(ops, "no_path")
            return
        from ..rules.terms import Num
        if not all(isinstance(a, Num) for a in args[:2]):
            self.fail(ops, "no_path")
            return
        from ..geometry import Pose2D
        ops.nav_start(Pose2D(float(args[0].value), float(args[1].value), 0.0),
                      category=self.category)
        self.goto("driving", ops)

    def state_driving(self, ops) -> None:
        self.drive_leg(ops, "done")

    def state_done(self, ops) -> None:
        self.succeed(ops)


class TeleopSkill(Skill):
    """Holds the executive while an operator steers; the actual commands come
    in over the deadman-guarded teleop channel. Ends shortly after the
    deadman lapses."""

    name = "teleop"

    def state_start(self, ops) -> None:
        ops.nav_cancel()
        self.goto("steering", ops)

    def state_steering(self, ops) -> None:
        if not ops.teleop_active() and self.in_state_for(ops) > 1.0:
            self.succeed(ops)


SKILL_REGISTRY: dict[str, type[Skill]] = {
    "charge": ChargeSkill,
    "deliver": DeliverSkill,
    "bring_item": BringItemSkill,
    "remind": RemindSkill,
    "uvc_disinfect": UvcDisinfectSkill,
    "take_menu_orders": TakeMenuOrdersSkill,
    "entertain": EntertainSkill,
    "teleop": TeleopSkill,
    "goto": GotoSkill,
}


def instantiate(request: ActionRequest) -> Skill:
    name = request.action_name()
    cls = SKILL_REGISTRY.get(name)
    if cls is None:
        raise UnknownAction(f"no skill registered for action {name!r}")
    return cls(request)


def validate_action(term: Term) -> str:
    """Registry check used at request submission; returns the skill name."""
    if isinstance(term, Atom):
        name = term.name
    elif isinstance(term, Struct):
        name = term.functor
    else:
        raise UnknownAction(f"not an action term: {term}")
    if name not in SKILL_REGISTRY:
        raise UnknownAction(f"no skill registered for action {name!r}")
    return name
