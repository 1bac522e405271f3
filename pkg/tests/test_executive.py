import numpy as np
import pytest

from carebot.executive import (
    ActionRequest,
    CalendarEntry,
    CalendarStore,
    Decision,
    ExecutiveConfig,
    Source,
    UnknownAction,
    arbitrate,
    charging_policy,
    instantiate,
    tick_calendar,
)
from carebot.geometry import Pose2D
from carebot.rules.parser import parse_term

import helpers


def req(action: str, priority: float, source: Source, at=0.0) -> ActionRequest:
    return ActionRequest(action=parse_term(action), priority=priority,
                         source=source, issued_at=at)


def running_skill(action="entertain(lounge)", priority=10.0, source=Source.ENGINE):
    r = req(action, priority, source)
    s = instantiate(r)
    s.state = "driving"
    return s


class TestArbitrate:
    def test_idle_engine_proposal_starts(self):
        d = arbitrate(None, [req("charge", 10, Source.ENGINE)])
        assert d.kind == "start"
        assert d.request.action_name() == "charge"

    def test_calendar_preempts_engine(self):
        s = running_skill()                      # engine @10
        d = arbitrate(s, [req("deliver(ward_a, reception, mail)", 50, Source.CALENDAR)])
        assert d.kind == "preempt_then_start"

    def test_manual_preempts_calendar(self):
        r = req("deliver(ward_a, reception, mail)", 50, Source.CALENDAR)
        s = instantiate(r)
        s.state = "driving"
        d = arbitrate(s, [req("charge", 100, Source.MANUAL)])
        assert d.kind == "preempt_then_start"

    def test_equal_priority_never_preempts(self):
        r = req("deliver(ward_a, reception, mail)", 50, Source.CALENDAR)
        s = instantiate(r)
        d = arbitrate(s, [req("remind(room3, hello)", 50, Source.CALENDAR)])
        assert d.kind == "continue"

    def test_engine_priority_capped_below_calendar(self):
        r = req("deliver(a, b, mail)", 50, Source.CALENDAR)
        s = instantiate(r)
        d = arbitrate(s, [req("entertain(lounge)", 80, Source.ENGINE)])
        assert d.kind == "continue"             # engine capped at 49 < 50

    def test_non_interruptible_defers(self):
        s = running_skill("bring_item(resident, bottle)", 50, Source.CALENDAR)
        s.state = "grasping"
        d = arbitrate(s, [req("charge", 100, Source.MANUAL)])
        assert d.kind == "continue"

    def test_fifo_between_equals(self):
        a = req("charge", 50, Source.CALENDAR, at=1.0)
        b = req("entertain(lounge)", 50, Source.CALENDAR, at=2.0)
        d = arbitrate(None, [b, a])
        assert d.request is a

    def test_unknown_action_raises(self):
        with pytest.raises(UnknownAction):
            arbitrate(None, [req("fly_to(space)", 100, Source.MANUAL)])


class TestChargingPolicy:
    def test_hard_threshold_system_priority(self):
        r = charging_policy(0.10, idle=False)
        assert r is not None
        assert r.source == Source.SYSTEM
        assert r.effective_priority == 90.0

    def test_high_battery_idle_no_request(self):
        assert charging_policy(0.9, idle=True) is None

    def test_opportunistic_when_idle(self):
        r = charging_policy(0.5, idle=True)
        assert r.source == Source.ENGINE
        assert r.effective_priority == 10.0

    def test_busy_above_hard_no_request(self):
        assert charging_policy(0.5, idle=False) is None


class TestCalendar:
    def entry(self, **kw):
        defaults = dict(entry_id="e1", action="entertain(lounge)", daily_hhmm="14:00")
        defaults.update(kw)
        return CalendarEntry(**defaults)

    def test_boundary_fires_exactly_once(self):
        e = self.entry()
        t_1359_59 = 13 * 3600 + 59 * 60 + 59.0
        t_1400_01 = 14 * 3600 + 1.0
        first = tick_calendar([e], 0.0, t_1359_59)
        second = tick_calendar([e], t_1359_59, t_1400_01)
        third = tick_calendar([e], t_1400_01, t_1400_01 + 3600)
        assert len(first) == 0 and len(second) == 1 and len(third) == 0

    def test_disabled_never_fires(self):
        e = self.entry(enabled=False)
        assert tick_calendar([e], 0.0, 86400.0) == []

    def test_two_entries_same_time_both_fire(self):
        e1 = self.entry()
        e2 = self.entry(entry_id="e2", action="remind(room3, lunch)")
        out = tick_calendar([e1, e2], 0.0, 15 * 3600.0)
        assert len(out) == 2

    def test_daily_rearms_next_day(self):
        e = self.entry()
        out = tick_calendar([e], 0.0, 3 * 86400.0)
        assert len(out) == 3

    def test_weekday_filter(self):
        e = self.entry(weekdays=[0, 2])          # Mon, Wed; sim starts Monday
        out = tick_calendar([e], 0.0, 7 * 86400.0)
        assert len(out) == 2

    def test_exactly_once_under_random_tick_jitter(self):
        e = self.entry()
        rng = np.random.default_rng(3)
        for _ in range(20):
            t = 0.0
            fired = 0
            while t < 86400.0:
                t2 = min(86400.0, t + float(rng.uniform(0.01, 977.0)))
                fired += len(tick_calendar([e], t, t2))
                t = t2
            assert fired == 1

    def test_one_shot(self):
        e = CalendarEntry(entry_id="o", action="charge", once_at=500.0)
        assert len(tick_calendar([e], 0.0, 400.0)) == 0
        assert len(tick_calendar([e], 400.0, 600.0)) == 1
        assert len(tick_calendar([e], 600.0, 9000.0)) == 0

    def test_store_round_trip(self, tmp_path):
        store = CalendarStore(tmp_path / "cal.json")
        store.upsert(self.entry())
        store.upsert(CalendarEntry(entry_id="o", action="charge", once_at=10.0,
                                   expiry_s=60.0))
        again = CalendarStore(tmp_path / "cal.json")
        assert {e.entry_id for e in again.list()} == {"e1", "o"}
        assert again.get("o").expiry_s == 60.0
        again.delete("e1")
        assert CalendarStore(tmp_path / "cal.json").get("e1") is None


class TestSkillRuns:
    def test_deliver_succeeds_and_ledger_counts(self):
        stack = helpers.make_stack()
        stack.executive.submit_manual("deliver(ward_a, reception, mail)")
        ok = stack.run_until(lambda: stack.ledger.succeeded.get("deliver", 0) == 1,
                             timeout_s=120.0)
        assert ok
        assert stack.ledger.attempted["deliver"] == 1
        assert stack.ledger.km_by_category["delivery"] > 0.01

    def test_km_ledger_matches_world_odometer(self):
        stack = helpers.make_stack()
        stack.executive.submit_manual("deliver(ward_a, reception, mail)")
        stack.run_until(lambda: stack.ledger.succeeded.get("deliver", 0) == 1, 120.0)
        total_km = stack.ledger.total_km()
        assert total_km == pytest.approx(stack.world.odometer / 1000.0, rel=0.01)

    def test_remind_door_sequence(self):
        stack = helpers.make_stack()
        stack.executive.submit_manual("remind(room3, lunch_time)")
        ok = stack.run_until(lambda: stack.ledger.succeeded.get("remind", 0) == 1,
                             timeout_s=180.0)
        assert ok
        transcripts = [p["text"] for t, p in stack.events if t == "speech/transcript"]
        assert any("lunch_time" in t for t in transcripts)
        door = stack.world.doors[0]
        assert not door.open                     # closed again after announcing

    def test_remind_without_marker_fails(self):
        world = helpers.exec_world()
        world.markers = [m for m in world.markers if m.kind != "door_handle"]
        stack = helpers.make_stack(world)
        stack.executive.submit_manual("remind(room3, hello)")
        ok = stack.run_until(
            lambda: stack.ledger.failed.get("remind", {}).get("marker_not_found", 0) == 1,
            timeout_s=120.0)
        assert ok

    def test_goto_drives_to_coordinates(self):
        from carebot.geometry import Pose2D

        stack = helpers.make_stack()
        stack.executive.submit_manual("goto(10.0, 6.5)")
        ok = stack.run_until(lambda: stack.ledger.succeeded.get("goto", 0) == 1,
                             timeout_s=120.0)
        assert ok
        assert stack.world.robot.pose.distance_to(Pose2D(10.0, 6.5)) < 0.2

    def test_take_menu_orders_reports_to_catering(self):
        stack = helpers.make_stack()
        stack.executive.submit_manual("take_menu_orders(ward_a, lounge)")
        ok = stack.run_until(
            lambda: stack.ledger.succeeded.get("take_menu_orders", 0) == 1, 240.0)
        assert ok
        orders = [p for t, p in stack.events if t == "catering/orders"]
        assert len(orders) == 1
        assert len(orders[0]["orders"]) == 2


class TestBringItemLadder:
    def test_clean_run(self):
        stack = helpers.make_stack()
        stack.executive.submit_manual("bring_item(resident, bottle)")
        ok = stack.run_until(lambda: stack.ledger.succeeded.get("bring_item", 0) == 1,
                             timeout_s=120.0)
        assert ok
        assert stack.ops.holding() is None

    def test_first_grasp_failure_recovers_same_slot(self):
        stack = helpers.make_stack()
        stack.ops.failures.fail_next_grasps = 1
        stack.executive.submit_manual("bring_item(resident, bottle)")
        ok = stack.run_until(lambda: stack.ledger.succeeded.get("bring_item", 0) == 1,
                             timeout_s=120.0)
        assert ok

    def test_double_failure_uses_alternative_slot(self):
        stack = helpers.make_stack()
        stack.ops.failures.fail_next_grasps = 2
        stack.executive.submit_manual("bring_item(resident, bottle)")
        ok = stack.run_until(lambda: stack.ledger.succeeded.get("bring_item", 0) == 1,
                             timeout_s=150.0)
        assert ok
        # both grasps on slot_a failed their sanity check, so the item that
        # was actually handed over came from the alternative slot
        slots = {s.name: s.item for s in stack.world.inventory}
        assert slots["slot_a"] == "bottle"
        assert slots["slot_b"] is None

    def test_handover_timeout_returns_object(self):
        stack = helpers.make_stack()
        stack.ops.failures.block_handover = True
        stack.executive.submit_manual("bring_item(resident, bottle)")
        ok = stack.run_until(
            lambda: stack.ledger.failed.get("bring_item", {}).get("handover_timeout", 0) == 1,
            timeout_s=240.0)
        assert ok
        assert stack.ops.holding() is None
        assert sum(1 for s in stack.world.inventory if s.item == "bottle") == 2

    def test_blocked_path_asks_for_help(self):
        world = helpers.exec_world()
        # person standing in the corridor the plan must cross
        world.people[0].pose = Pose2D(8.0, 5.0, 0.0)
        world.people[0].retreat = (8.0, 7.4)
        world.rooms["lounge"] = Pose2D(10.5, 5.0, 0.0)
        stack = helpers.make_stack(world)
        stack.executive.submit_manual("entertain(lounge)")
        saw_help = stack.run_until(
            lambda: any(t == "skill/help" for t, _ in stack.events), timeout_s=90.0)
        done = stack.run_until(lambda: stack.ledger.succeeded.get("entertain", 0) == 1,
                               timeout_s=180.0)
        assert done                              # person cleared, skill completed


class TestPreemption:
    def test_priority_chain_within_one_decision_tick(self):
        stack = helpers.make_stack()
        stack.executive.submit(req("entertain(lounge)", 10, Source.ENGINE))
        stack.run_until(lambda: stack.executive.current_action() is not None, 10.0)
        assert "entertain" in stack.executive.current_action()

        stack.executive.submit(req("deliver(ward_a, reception, mail)", 50,
                                   Source.CALENDAR, at=stack.world.clock))
        t0 = stack.world.clock
        stack.run_until(lambda: stack.executive.pending_start is not None or
                        (stack.executive.current_action() or "").startswith("deliver"),
                        timeout_s=1.0)
        assert stack.world.clock - t0 <= 0.25    # decided within ~one 10 Hz tick
        stack.run_until(lambda: (stack.executive.current_action() or "").startswith("deliver"),
                        timeout_s=30.0)

        stack.executive.submit_manual("charge")
        stack.run_until(lambda: (stack.executive.current_action() or "") == "charge",
                        timeout_s=30.0)
        assert stack.executive.current_action() == "charge"

    def test_preempted_bring_item_stows_object(self):
        stack = helpers.make_stack()
        stack.executive.submit(req("bring_item(resident, bottle)", 50,
                                   Source.CALENDAR))
        # wait until the bottle is actually in the gripper and driving
        stack.run_until(lambda: stack.ops.holding() == "bottle" and
                        stack.executive.running.state == "driving", timeout_s=60.0)
        assert stack.ops.holding() == "bottle"
        stack.executive.submit_manual("charge")
        stack.run_until(lambda: (stack.executive.current_action() or "") == "charge",
                        timeout_s=60.0)
        # cleanup ran before the successor: gripper empty, bottle back in a slot
        assert stack.ops.holding() is None
        assert sum(1 for s in stack.world.inventory if s.item == "bottle") == 2

    def test_preempt_during_noninterruptible_defers(self):
        stack = helpers.make_stack()
        stack.executive.submit_manual("bring_item(resident, bottle)")
        stack.run_until(lambda: stack.executive.running is not None and
                        stack.executive.running.state == "grasping", 30.0)
        stack.executive.submit(req("deliver(ward_a, reception, mail)", 50,
                                   Source.CALENDAR, at=stack.world.clock))
        for _ in range(3):
            stack.tick()
        assert stack.executive.running.name == "bring_item"   # still not preempted
        stack.run_until(lambda: (stack.executive.current_action() or "")
                        .startswith("deliver"), timeout_s=60.0)
        assert stack.ops.holding() is None


class TestUvc:
    def stack_with_holder(self):
        stack = helpers.make_stack()
        stack.ops.holder_placed_flag = True
        return stack

    def test_holder_missing_fails(self):
        stack = helpers.make_stack()
        stack.executive.submit_manual("uvc_disinfect(handrail)")
        ok = stack.run_until(
            lambda: stack.ledger.failed.get("uvc_disinfect", {}).get("holder_missing", 0) == 1,
            timeout_s=30.0)
        assert ok

    def test_clean_disinfection(self):
        stack = self.stack_with_holder()
        stack.executive.submit_manual("uvc_disinfect(handrail)")
        ok = stack.run_until(lambda: stack.ledger.succeeded.get("uvc_disinfect", 0) == 1,
                             timeout_s=180.0)
        assert ok

    def test_person_near_pauses_with_warning(self):
        world = helpers.exec_world()
        world.people[0].pose = Pose2D(4.3, 5.6, 0.0)     # right at the handrail
        world.people[0].retreat = (10.5, 7.0)
        world.people[0].asked_to_move = False
        stack = helpers.make_stack(world)
        stack.ops.holder_placed_flag = True
        stack.executive.submit_manual("uvc_disinfect(handrail)")
        paused = stack.run_until(
            lambda: stack.executive.running is not None and
            stack.executive.running.state == "paused", timeout_s=120.0)
        assert paused
        assert stack.world.robot.warning
        warnings = [p for t, p in stack.events if t == "skill/warning"]
        assert warnings
        # person walks away -> resumes and finishes
        stack.world.people[0].asked_to_move = True
        ok = stack.run_until(lambda: stack.ledger.succeeded.get("uvc_disinfect", 0) == 1,
                             timeout_s=180.0)
        assert ok
        assert not stack.world.robot.warning


class TestArmCollision:
    def test_pause_resume_transient_completes(self):
        stack = helpers.make_stack()
        stack.executive.submit_manual("bring_item(resident, bottle)")
        stack.run_until(lambda: stack.executive.running is not None and
                        stack.executive.running.state == "grasping", 30.0)
        stack.ops.failures.arm_obstructed_until = stack.world.clock + 0.8
        ok = stack.run_until(lambda: stack.ledger.succeeded.get("bring_item", 0) == 1,
                             timeout_s=120.0)
        assert ok

    def test_pause_resume_persistent_fails_skill(self):
        stack = helpers.make_stack()
        stack.executive.submit_manual("bring_item(resident, bottle)")
        stack.run_until(lambda: stack.executive.running is not None and
                        stack.executive.running.state == "grasping", 30.0)
        stack.ops.failures.arm_obstructed_until = stack.world.clock + 60.0
        ok = stack.run_until(
            lambda: any(r for r in stack.ledger.failed.get("bring_item", {})
                        if r in ("collision", "grasp_failed")), timeout_s=120.0)
        assert ok

    def test_fail_skill_policy_immediate(self):
        cfg = ExecutiveConfig(arm_collision_policy="fail_skill")
        stack = helpers.make_stack(config=cfg)
        stack.executive.submit_manual("bring_item(resident, bottle)")
        stack.run_until(lambda: stack.executive.running is not None and
                        stack.executive.running.state == "grasping", 30.0)
        t0 = stack.world.clock
        stack.ops.failures.arm_obstructed_until = stack.world.clock + 60.0
        ok = stack.run_until(
            lambda: any(stack.ledger.failed.get("bring_item", {}).values()),
            timeout_s=10.0)
        assert ok
        assert stack.world.clock - t0 < 1.0


class TestEstop:
    def test_estop_freezes_and_skips_cleanup(self):
        stack = helpers.make_stack()
        stack.executive.submit_manual("bring_item(resident, bottle)")
        stack.run_until(lambda: stack.ops.holding() == "bottle", timeout_s=60.0)
        stack.world.robot.estop = True
        stack.executive.engage_estop()
        pose0 = stack.world.robot.pose
        stack.run_for(2.0)
        assert stack.world.robot.pose == pose0
        # hardware-release semantics: no cleanup ran, object still in hand
        assert stack.ops.holding() == "bottle"
        assert stack.executive.current_action() is None
        stack.world.robot.estop = False
        stack.executive.release_estop()
        stack.executive.submit_manual("charge")
        ok = stack.run_until(lambda: stack.world.robot.docked, timeout_s=120.0)
        assert ok


class TestEngineIntegration:
    RULES = """
propose(entertain(lounge), 10) :- idle, not docked.
"""

    def test_engine_proposal_starts_skill(self):
        stack = helpers.make_stack(rules_text=self.RULES)
        ok = stack.run_until(lambda: (stack.executive.current_action() or "")
                             .startswith("entertain"), timeout_s=10.0)
        assert ok

    def test_battery_hard_charge_preempts_entertainment_not_manual(self):
        stack = helpers.make_stack(rules_text=self.RULES)
        stack.run_until(lambda: (stack.executive.current_action() or "")
                        .startswith("entertain"), timeout_s=10.0)
        stack.world.robot.battery = 0.10
        stack.run_until(lambda: (stack.executive.current_action() or "") == "charge",
                        timeout_s=10.0)
        assert stack.executive.current_action() == "charge"

        # manual command is NOT preempted by the hard-charge request
        stack2 = helpers.make_stack()
        stack2.executive.submit_manual("take_menu_orders(ward_a)")
        stack2.run_until(lambda: stack2.executive.current_action() is not None, 10.0)
        stack2.world.robot.battery = 0.10
        stack2.run_for(1.0)
        assert (stack2.executive.current_action() or "").startswith("take_menu_orders")
