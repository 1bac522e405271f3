"""StackRuntime: the stack wired to the bus, node registry, action log,
face registry and screening state; the object the HTTP gateway serves."""

from __future__ import annotations

import hashlib
import threading
from pathlib import Path

import numpy as np

from ..app import Stack
from ..executive.facts import build_facts
from ..perception.thermal import (
    EBTBaseline,
    calibrate_baseline,
    ebt_point,
    flag_ebt,
    make_synthetic_frame,
)
from ..rules.parser import parse
from .bus import MessageBus
from .logstore import ActionLog
from .faces import FaceRegistry
from .supervisor import (
    HEARTBEAT_PERIOD,
    NodeRegistry,
    RestartPolicy,
    supervise_tick,
)

NODE_NAMES = ("simworld", "navigation", "executive", "perception", "gateway")


class StackRuntime:
    def __init__(self, stack: Stack, log_dir: str | Path, salt: bytes | None = None):
        self.stack = stack
        self.bus = MessageBus()
        self.bus.clock_fn = lambda: stack.world.clock
        stack.ops.emit_fn = self.emit
        self.log = ActionLog(log_dir)
        self.faces = FaceRegistry(salt=salt)
        self.registry = NodeRegistry(bus=self.bus)
        self.alive = {name: True for name in NODE_NAMES}
        self.ebt_alerts: list[dict] = []
        self.ebt_baseline = EBTBaseline(mean=309.0, stddev=0.3, n=10)
        self.lock = threading.RLock()
        self._alerts_sub = self.bus.subscribe("ebt/alerts")
        self._last_heartbeat = -1e9
        self._register_nodes()

    # -- node wiring -----------------------------------------------------------

    def _register_nodes(self) -> None:
        now = self.stack.world.clock
        ops = self.stack.ops

        def nav_param(key, value):
            if key == "lookahead":
                ops.follow_cfg.lookahead = float(value)
            elif key == "scale_zone":
                pass                             # read on the next gate call

        def exec_param(key, value):
            if key == "rules_file":
                text = Path(str(value)).read_text()
                self.stack.executive.rulebase = parse(text)
            elif key == "decision_period":
                self.stack.executive.config.decision_period = float(value)

        self.registry.register("simworld", now=now)
        self.registry.register("navigation", now=now,
                               params={"lookahead": ops.follow_cfg.lookahead,
                                       "scale_zone": 1.0},
                               on_param=nav_param)
        self.registry.register("executive", now=now,
                               params={"rules_file": "", "decision_period":
                                       self.stack.executive.config.decision_period},
                               on_param=exec_param)
        self.registry.register("perception", now=now)
        self.registry.register("gateway", now=now,
                               policy=RestartPolicy(max_restarts=10))

    # -- bus / logging -----------------------------------------------------------

    def emit(self, topic: str, payload: dict) -> None:
        self.bus.publish(topic, payload, publisher="stack")
        if topic in ("skill/events", "skill/help", "skill/warning", "nav/safety"):
            self.log.append(self.stack.world.clock, {"topic": topic, **payload})

    # -- ticking -------------------------------------------------------------------

    def tick(self) -> None:
        with self.lock:
            self.stack.tick()
            now = self.stack.world.clock
            if now - self._last_heartbeat >= HEARTBEAT_PERIOD - 1e-9:
                self._last_heartbeat = now
                for name in NODE_NAMES:
                    if self.alive.get(name, True):
                        self.registry.heartbeat(name, now)
                supervise_tick(self.registry, now)
                self._publish_telemetry(now)
            for env in self._alerts_sub.pull():
                self.ebt_alerts.append(dict(env.payload, stamp=env.stamp,
                                            ack=False))

    def _publish_telemetry(self, now: float) -> None:
        r = self.stack.world.robot
        self.bus.publish("nav/pose", {"x": round(r.pose.x, 4), "y": round(r.pose.y, 4),
                                      "theta": round(r.pose.theta, 4)}, stamp=now)
        self.bus.publish("robot/status", {
            "battery": round(r.battery, 4),
            "led": r.led_state.value,
            "docked": r.docked,
            "estop": r.estop,
            "action": self.stack.executive.current_action(),
        }, stamp=now)
        if self.stack.ops.nav.plan is not None and self.stack.ops.nav.status == "running":
            wps = self.stack.ops.nav.plan.waypoints
            self.bus.publish("nav/path", {
                "points": [[round(w.x, 3), round(w.y, 3)] for w in wps[::10]]},
                stamp=now)
        self.bus.publish("world/people", {
            "people": [{"name": p.name, "x": round(p.pose.x, 3),
                        "y": round(p.pose.y, 3)} for p in self.stack.world.people]},
            stamp=now)

    def run_for(self, sim_seconds: float) -> None:
        end = self.stack.world.clock + sim_seconds
        while self.stack.world.clock < end - 1e-9:
            self.tick()

    # -- screening ---------------------------------------------------------------

    def calibrate_ebt(self, samples: list[float]) -> EBTBaseline:
        self.ebt_baseline = calibrate_baseline(samples,
                                               created_at=self.stack.world.clock)
        return self.ebt_baseline

    def screen_person(self, person_name: str) -> dict:
        """Run the screening pipeline against a person's ground-truth state."""
        person = next((p for p in self.stack.world.people if p.name == person_name),
                      None)
        if person is None:
            raise KeyError(person_name)
        stable = int.from_bytes(hashlib.sha256(person_name.encode()).digest()[:4], "big")
        rng = np.random.default_rng(self.stack.world.rng_seed ^ stable)
        frame, face = make_synthetic_frame(person.body_temp_k, person.glasses, rng,
                                           stamp=self.stack.world.clock,
                                           person_id_hash=f"p-{stable % 99999}")
        temp, used = ebt_point(face, frame)
        decision = flag_ebt(temp, self.ebt_baseline, used)
        result = {"person": face.person_id_hash, "temp_k": round(temp, 2),
                  "point_used": used, "elevated": decision.elevated,
                  "confidence": round(decision.confidence, 3)}
        self.emit("ebt/screened", result)
        if decision.notify:
            self.bus.publish("ebt/alerts", result, stamp=self.stack.world.clock)
        return result

    # -- status ------------------------------------------------------------------

    def status(self) -> dict:
        r = self.stack.world.robot
        return {
            "pose": {"x": r.pose.x, "y": r.pose.y, "theta": r.pose.theta},
            "battery": r.battery,
            "current_action": self.stack.executive.current_action(),
            "localization_health": 1.0,
            "nodes_summary": {rec.name: rec.state.value
                              for rec in self.registry.nodes.values()},
            "estop": r.estop,
            "docked": r.docked,
            "led": r.led_state.value,
            "clock": self.stack.world.clock,
            "metrics": self.stack.ledger.to_dict(),
        }
