"""Node registry with heartbeat supervision, restart backoff and dynamic
parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

HEARTBEAT_PERIOD = 0.5
HEARTBEAT_TIMEOUT = 2.0


class NodeDown(Exception):
    pass


class UnknownParam(Exception):
    pass


class NodeState(str, Enum):
    RUNNING = "running"
    STOPPED = "stopped"
    CRASHED = "crashed"
    FAILED_PERMANENT = "failed_permanent"


@dataclass
class RestartPolicy:
    max_restarts: int = 5
    backoff_initial: float = 1.0
    backoff_factor: float = 2.0

    def backoff(self, restarts_used: int) -> float:
        return self.backoff_initial * self.backoff_factor ** restarts_used


@dataclass
class NodeRecord:
    name: str
    state: NodeState = NodeState.RUNNING
    last_heartbeat: float = 0.0
    policy: RestartPolicy = field(default_factory=RestartPolicy)
    restarts_used: int = 0
    restart_due: float | None = None
    params: dict[str, Any] = field(default_factory=dict)
    on_param: Callable[[str, Any], None] | None = None
    restart_fn: Callable[[], None] | None = None

    def summary(self) -> dict:
        return {"name": self.name, "state": self.state.value,
                "last_heartbeat": self.last_heartbeat,
                "restarts_used": self.restarts_used,
                "params": dict(self.params)}


class NodeRegistry:
    def __init__(self, bus=None):
        self.nodes: dict[str, NodeRecord] = {}
        self.bus = bus
        self.alerted: set[str] = set()

    def register(self, name: str, policy: RestartPolicy | None = None,
                 params: dict | None = None, on_param=None,
                 restart_fn=None, now: float = 0.0) -> NodeRecord:
        rec = NodeRecord(name=name, policy=policy or RestartPolicy(),
                         last_heartbeat=now, params=params or {},
                         on_param=on_param, restart_fn=restart_fn)
        self.nodes[name] = rec
        return rec

    def heartbeat(self, name: str, now: float) -> None:
        rec = self.nodes.get(name)
        if rec is not None and rec.state == NodeState.RUNNING:
            rec.last_heartbeat = now

    def get(self, name: str) -> NodeRecord | None:
        return self.nodes.get(name)

    def start(self, name: str, now: float) -> None:
        """Operator-initiated start: clears alerts and resets the budget."""
        rec = self.nodes[name]
        if rec.state != NodeState.RUNNING:
            rec.state = NodeState.RUNNING
            rec.last_heartbeat = now
            rec.restart_due = None
            rec.restarts_used = 0
            self.alerted.discard(name)
            if rec.restart_fn:
                rec.restart_fn()

    def stop(self, name: str) -> None:
        rec = self.nodes[name]
        rec.state = NodeState.STOPPED
        rec.restart_due = None

    def summary(self) -> list[dict]:
        return [rec.summary() for rec in self.nodes.values()]


def supervise_tick(registry: NodeRegistry, now: float,
                   timeout: float = HEARTBEAT_TIMEOUT) -> list[tuple[str, str]]:
    """One supervision pass. Returns the actions taken as (kind, node) pairs:
    'crashed' (heartbeat timed out), 'restart' (backoff elapsed, node
    restarted), 'permanent_failure' (budget exhausted, exactly one alert)."""
    actions: list[tuple[str, str]] = []
    for rec in registry.nodes.values():
        if rec.state == NodeState.RUNNING and now - rec.last_heartbeat > timeout:
            rec.state = NodeState.CRASHED
            actions.append(("crashed", rec.name))
            if rec.restarts_used < rec.policy.max_restarts:
                rec.restart_due = now + rec.policy.backoff(rec.restarts_used)
            else:
                rec.state = NodeState.FAILED_PERMANENT
                rec.restart_due = None
                if rec.name not in registry.alerted:
                    registry.alerted.add(rec.name)
                    actions.append(("permanent_failure", rec.name))
                    if registry.bus is not None:
                        registry.bus.publish("supervisor/alerts",
                                             {"node": rec.name,
                                              "state": "failed_permanent"},
                                             stamp=now)
        elif rec.state == NodeState.CRASHED and rec.restart_due is not None \
                and now >= rec.restart_due:
            rec.restarts_used += 1
            rec.state = NodeState.RUNNING
            rec.last_heartbeat = now
            rec.restart_due = None
            actions.append(("restart", rec.name))
            if rec.restart_fn:
                rec.restart_fn()
            if registry.bus is not None:
                registry.bus.publish("supervisor/events",
                                     {"node": rec.name, "event": "restarted",
                                      "restarts_used": rec.restarts_used}, stamp=now)
    return actions


def set_param(registry: NodeRegistry, node: str, key: str, value,
              bus=None, now: float = 0.0) -> dict:
    """Dynamic parameter change: the node must be running and must have
    registered the key; the new value is echoed on the params topic."""
    rec = registry.nodes.get(node)
    if rec is None or rec.state != NodeState.RUNNING:
        raise NodeDown(f"node {node!r} is not running")
    if key not in rec.params:
        raise UnknownParam(f"node {node!r} has no parameter {key!r}")
    rec.params[key] = value
    if rec.on_param:
        rec.on_param(key, value)
    topic_bus = bus or registry.bus
    if topic_bus is not None:
        topic_bus.publish("params/" + node, {"key": key, "value": value}, stamp=now)
    return {"node": node, "key": key, "value": value}
