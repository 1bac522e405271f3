"""Priority arbitration across the three command sources, charging policy,
and the decision loop that owns the running skill."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..rules.engine import RuleBase, propose
from ..rules.parser import parse_term
from ..rules.terms import Atom, Num, Struct, Term
from .calendar import CalendarStore, tick_calendar
from .metrics import MetricsLedger
from .requests import (
    ActionRequest,
    DEFAULT_ENGINE_PRIORITY,
    PRIORITY_HARD_CHARGE,
    Source,
    UnknownAction,
)
from .skills import Skill, instantiate, validate_action

HARD_CHARGE_THRESHOLD = 0.15
OPPORTUNISTIC_CHARGE_THRESHOLD = 0.8
DECISION_HZ = 10.0


@dataclass
class Decision:
    kind: str                        # continue | start | preempt_then_start
    request: ActionRequest | None = None


def arbitrate(running: Skill | None, candidates: list[ActionRequest]) -> Decision:
    """Select the most important action.

    Highest effective priority wins (FIFO among equals). A strictly greater
    priority than the running skill preempts it, but only from interruptible
    states; equal priority never preempts.
    """
    for c in candidates:
        validate_action(c.action)
    if not candidates:
        return Decision("continue")
    best = min(candidates, key=lambda r: (-r.effective_priority, r.issued_at, r.order))
    if running is None or not running.running:
        return Decision("start", best)
    if best.effective_priority > running.request.effective_priority \
            and running.interruptible_now():
        return Decision("preempt_then_start", best)
    return Decision("continue")


def charging_policy(battery: float, idle: bool) -> ActionRequest | None:
    """Hard low-battery docking beats calendar work but never manual commands;
    an idle robot tops up opportunistically at engine priority."""
    if battery < HARD_CHARGE_THRESHOLD:
        return ActionRequest(action=Atom("charge"), priority=PRIORITY_HARD_CHARGE,
                             source=Source.SYSTEM, issued_at=0.0)
    if idle and battery < OPPORTUNISTIC_CHARGE_THRESHOLD:
        return ActionRequest(action=Atom("charge"), priority=DEFAULT_ENGINE_PRIORITY,
                             source=Source.ENGINE, issued_at=0.0)
    return None


@dataclass
class ExecutiveConfig:
    decision_period: float = 1.0 / DECISION_HZ
    arm_collision_policy: str = "pause_resume"      # or fail_skill


class Executive:
    """Owns arbitration, the single running skill, and the calendar."""

    def __init__(self, ops, rulebase: RuleBase | None = None,
                 calendar: CalendarStore | None = None,
                 config: ExecutiveConfig | None = None,
                 ledger: MetricsLedger | None = None):
        self.ops = ops
        self.rulebase = rulebase or RuleBase(rules=[])
        self.calendar = calendar
        self.config = config or ExecutiveConfig()
        self.ledger = ledger or MetricsLedger()
        self.queue: list[ActionRequest] = []
        self.running: Skill | None = None
        self.pending_start: ActionRequest | None = None
        self.last_calendar_tick = 0.0
        self.last_decision = -1e9
        self.estopped = False

    # -- request intake ------------------------------------------------------

    def submit_manual(self, action_text: str) -> ActionRequest:
        term = parse_term(action_text)
        validate_action(term)
        req = ActionRequest(action=term, priority=100.0, source=Source.MANUAL,
                            issued_at=self.ops.clock())
        self.queue.append(req)
        return req

    def submit(self, req: ActionRequest) -> None:
        validate_action(req.action)
        self.queue.append(req)

    # -- estop ---------------------------------------------------------------

    def engage_estop(self) -> None:
        """Hardware-release semantics: skills are dropped with cleanup skipped."""
        self.estopped = True
        self.ops.nav_cancel()
        self.ops.arm_cancel()
        if self.running is not None and self.running.running:
            self.running.outcome = None
            self.running.fail(self.ops, "estop")
            self.ledger.record_failure(self.running.name, "estop")
            self.running = None
        self.pending_start = None

    def release_estop(self) -> None:
        self.estopped = False

    # -- decision tick ---------------------------------------------------------

    def _engine_candidates(self, facts: list[Term]) -> list[ActionRequest]:
        out = []
        now = self.ops.clock()
        for p in propose(self.rulebase, facts):
            try:
                validate_action(p.action)
            except UnknownAction:
                continue
            out.append(ActionRequest(action=p.action, priority=p.priority,
                                     source=Source.ENGINE, issued_at=now))
        return out

    def _dedupe(self, candidates: list[ActionRequest]) -> list[ActionRequest]:
        """Drop engine/system candidates for work already running or queued."""
        seen = set()
        if self.running is not None and self.running.running:
            seen.add(str(self.running.request.action))
        out = []
        for req in candidates:
            key = str(req.action)
            if req.source in (Source.ENGINE, Source.SYSTEM) and key in seen:
                continue
            seen.add(key)
            out.append(req)
        return out

    def tick(self, facts: list[Term] | None = None) -> None:
        now = self.ops.clock()
        if now - self.last_decision < self.config.decision_period - 1e-9:
            self._step_running()
            return
        self.last_decision = now

        if self.calendar is not None:
            fired = tick_calendar(self.calendar.list(), self.last_calendar_tick, now)
            self.queue.extend(fired)
            self.last_calendar_tick = now

        self.queue = [r for r in self.queue
                      if r.expires_at is None or r.expires_at >= now]

        if self.estopped:
            return

        candidates = list(self.queue)
        if facts is not None:
            candidates = candidates + self._engine_candidates(facts)
        idle = self.running is None or not self.running.running
        charge_req = charging_policy(self.ops.battery(), idle=idle)
        if charge_req is not None and not self.ops.docked():
            charge_req.issued_at = now
            candidates.append(charge_req)
        candidates = self._dedupe(candidates)

        if self.pending_start is None:
            decision = arbitrate(self.running if (self.running and self.running.running)
                                 else None, candidates)
            if decision.kind == "start":
                self._consume(decision.request)
                self._start(decision.request)
            elif decision.kind == "preempt_then_start":
                self._consume(decision.request)
                self.pending_start = decision.request
                self.running.begin_preempt(self.ops)
        self._step_running()

    def _consume(self, req: ActionRequest) -> None:
        self.queue = [r for r in self.queue if r.order != req.order]

    def _start(self, req: ActionRequest) -> None:
        self.running = instantiate(req)
        self.ledger.record_attempt(self.running.name)
        self.ops.set_active_category(self.running.category)
        self.ops.emit("skill/events", {"skill": self.running.name, "state": "started",
                                       "source": req.source.value,
                                       "priority": req.effective_priority})

    def _step_running(self) -> None:
        if self.running is None:
            return
        if self.running.running:
            self.running.step(self.ops)
        if not self.running.running:
            out = self.running.outcome
            if out.status == "success":
                self.ledger.record_success(self.running.name)
            elif out.status == "failed":
                self.ledger.record_failure(self.running.name, out.reason or "unknown")
            self.ops.set_active_category("other")
            self.running = None
            if self.pending_start is not None:
                nxt = self.pending_start
                self.pending_start = None
                self._start(nxt)

    def current_action(self) -> str | None:
        if self.running is not None and self.running.running:
            return str(self.running.request.action)
        return None
