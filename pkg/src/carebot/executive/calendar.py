"""Calendar scheduling: one-shot and daily entries, exactly-once firing,
JSON document persistence with atomic rewrite."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..rules.parser import parse_term
from .requests import ActionRequest, PRIORITY_CALENDAR, Source

DAY_S = 86400.0


@dataclass
class CalendarEntry:
    entry_id: str
    action: str                        # action term text, e.g. "deliver(ward_a, reception, mail)"
    once_at: float | None = None       # sim-time seconds for one-shot entries
    daily_hhmm: str | None = None      # "HH:MM" for daily entries
    weekdays: list[int] | None = None  # 0=Mon .. 6=Sun; None = every day
    enabled: bool = True
    expiry_s: float | None = None      # queued request expires this long after firing

    def __post_init__(self):
        if (self.once_at is None) == (self.daily_hhmm is None):
            raise ValueError("entry needs exactly one of once_at / daily_hhmm")
        if self.daily_hhmm is not None:
            h, m = self.daily_hhmm.split(":")
            if not (0 <= int(h) < 24 and 0 <= int(m) < 60):
                raise ValueError(f"bad daily time {self.daily_hhmm!r}")

    def fire_times(self, t0: float, t1: float) -> list[float]:
        """Scheduled instants in the window (t0, t1]."""
        if not self.enabled or t1 <= t0:
            return []
        if self.once_at is not None:
            return [self.once_at] if t0 < self.once_at <= t1 else []
        h, m = self.daily_hhmm.split(":")
        offset = int(h) * 3600.0 + int(m) * 60.0
        out = []
        day = int(t0 // DAY_S)
        while day * DAY_S + offset <= t1:
            at = day * DAY_S + offset
            if t0 < at <= t1:
                weekday = day % 7          # sim clock starts Monday 00:00
                if self.weekdays is None or weekday in self.weekdays:
                    out.append(at)
            day += 1
        return out

    def to_request(self, fired_at: float) -> ActionRequest:
        expires = None if self.expiry_s is None else fired_at + self.expiry_s
        return ActionRequest(action=parse_term(self.action), priority=PRIORITY_CALENDAR,
                             source=Source.CALENDAR, issued_at=fired_at,
                             expires_at=expires)


def tick_calendar(entries: list[CalendarEntry], last_tick: float,
                  now: float) -> list[ActionRequest]:
    """Requests for every entry firing in (last_tick, now], exactly once each
    regardless of tick jitter."""
    out: list[ActionRequest] = []
    for e in entries:
        for at in e.fire_times(last_tick, now):
            out.append(e.to_request(at))
    return out


class CalendarStore:
    """Entry collection, disk-backed when given a path (every mutation then
    atomically rewrites the JSON document)."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.entries: dict[str, CalendarEntry] = {}
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        data = json.loads(self.path.read_text())
        self.entries = {d["entry_id"]: CalendarEntry(**d) for d in data}

    def _flush(self) -> None:
        if self.path is None:
            return
        data = [asdict(e) for e in self.entries.values()]
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(data, indent=2) + "\n")
        os.replace(tmp, self.path)

    def list(self) -> list[CalendarEntry]:
        return list(self.entries.values())

    def get(self, entry_id: str) -> CalendarEntry | None:
        return self.entries.get(entry_id)

    def upsert(self, entry: CalendarEntry) -> None:
        self.entries[entry.entry_id] = entry
        self._flush()

    def delete(self, entry_id: str) -> bool:
        if entry_id in self.entries:
            del self.entries[entry_id]
            self._flush()
            return True
        return False
