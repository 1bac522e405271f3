from .requests import (
    ActionRequest,
    DEFAULT_ENGINE_PRIORITY,
    ENGINE_PRIORITY_CAP,
    PRIORITY_CALENDAR,
    PRIORITY_HARD_CHARGE,
    PRIORITY_MANUAL,
    Source,
    UnknownAction,
)
from .calendar import CalendarEntry, CalendarStore, tick_calendar
from .metrics import MetricsLedger
from .skills import SKILL_REGISTRY, Skill, SkillOutcome, instantiate, validate_action
from .arbiter import (
    Decision,
    Executive,
    ExecutiveConfig,
    HARD_CHARGE_THRESHOLD,
    OPPORTUNISTIC_CHARGE_THRESHOLD,
    arbitrate,
    charging_policy,
)
from .facts import build_facts

__all__ = [
    "ActionRequest",
    "CalendarEntry",
    "CalendarStore",
    "DEFAULT_ENGINE_PRIORITY",
    "Decision",
    "ENGINE_PRIORITY_CAP",
    "Executive",
    "ExecutiveConfig",
    "HARD_CHARGE_THRESHOLD",
    "MetricsLedger",
    "OPPORTUNISTIC_CHARGE_THRESHOLD",
    "PRIORITY_CALENDAR",
    "PRIORITY_HARD_CHARGE",
    "PRIORITY_MANUAL",
    "SKILL_REGISTRY",
    "Skill",
    "SkillOutcome",
    "Source",
    "UnknownAction",
    "arbitrate",
    "build_facts",
    "charging_policy",
    "instantiate",
    "tick_calendar",
    "validate_action",
]
