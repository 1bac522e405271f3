"""Operational metrics: distance by task category, skill outcomes, uptime."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field


@dataclass
class MetricsLedger:
    km_by_category: dict = field(default_factory=lambda: defaultdict(float))
    attempted: dict = field(default_factory=lambda: defaultdict(int))
    succeeded: dict = field(default_factory=lambda: defaultdict(int))
    failed: dict = field(default_factory=lambda: defaultdict(lambda: defaultdict(int)))
    uptime_s: float = 0.0

    def add_distance(self, category: str, meters: float) -> None:
        self.km_by_category[category] += meters / 1000.0

    def record_attempt(self, skill: str) -> None:
        self.attempted[skill] += 1

    def record_success(self, skill: str) -> None:
        self.succeeded[skill] += 1

    def record_failure(self, skill: str, reason: str) -> None:
        self.failed[skill][reason] += 1

    def total_km(self) -> float:
        return sum(self.km_by_category.values())

    def to_dict(self) -> dict:
        return {
            "km_by_category": dict(self.km_by_category),
            "attempted": dict(self.attempted),
            "succeeded": dict(self.succeeded),
            "failed": {k: dict(v) for k, v in self.failed.items()},
            "uptime_s": self.uptime_s,
        }
