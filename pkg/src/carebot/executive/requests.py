"""Action requests from the three command sources, with total priority order."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

from ..rules.terms import Atom, Struct, Term

PRIORITY_MANUAL = 100.0
PRIORITY_HARD_CHARGE = 90.0
PRIORITY_CALENDAR = 50.0
ENGINE_PRIORITY_CAP = 49.0       # engine proposals always rank below calendar
DEFAULT_ENGINE_PRIORITY = 10.0

_seq = itertools.count()


class Source(str, Enum):
    MANUAL = "manual"
    CALENDAR = "calendar"
    ENGINE = "engine"
    SYSTEM = "system"            # internal policies (hard battery charge)


class UnknownAction(Exception):
    pass


@dataclass
class ActionRequest:
    action: Term
    priority: float
    source: Source
    issued_at: float
    expires_at: float | None = None
    order: int = field(default_factory=lambda: next(_seq))

    @property
    def effective_priority(self) -> float:
        if self.source == Source.MANUAL:
            return PRIORITY_MANUAL
        if self.source == Source.CALENDAR:
            return PRIORITY_CALENDAR
        if self.source == Source.ENGINE:
            return min(self.priority, ENGINE_PRIORITY_CAP)
        return self.priority

    def action_name(self) -> str:
        if isinstance(self.action, Atom):
            return self.action.name
        if isinstance(self.action, Struct):
            return self.action.functor
        raise UnknownAction(f"not an action term: {self.action}")

    def args(self) -> list:
        if isinstance(self.action, Struct):
            return list(self.action.args)
        return []
