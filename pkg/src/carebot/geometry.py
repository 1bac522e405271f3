"""Shared 2D pose and angle helpers used across the stack."""

from __future__ import annotations

import math
from dataclasses import dataclass


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    theta = math.fmod(theta, 2.0 * math.pi)
    if theta > math.pi:
        theta -= 2.0 * math.pi
    elif theta <= -math.pi:
        theta += 2.0 * math.pi
    return theta


@dataclass(frozen=True)
class Pose2D:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def moved(self, dx: float, dy: float, dtheta: float = 0.0) -> "Pose2D":
        return Pose2D(self.x + dx, self.y + dy, wrap_angle(self.theta + dtheta))

    def distance_to(self, other: "Pose2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def heading_to(self, other: "Pose2D") -> float:
        return math.atan2(other.y - self.y, other.x - self.x)

    def transform_point(self, px: float, py: float) -> tuple[float, float]:
        """Map a point from this pose's local frame into the world frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (self.x + c * px - s * py, self.y + s * px + c * py)

    def inverse_transform_point(self, wx: float, wy: float) -> tuple[float, float]:
        """Map a world point into this pose's local frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        dx, dy = wx - self.x, wy - self.y
        return (c * dx + s * dy, -s * dx + c * dy)

    def compose(self, delta: "Pose2D") -> "Pose2D":
        """Apply a local-frame pose increment to this pose."""
        wx, wy = self.transform_point(delta.x, delta.y)
        return Pose2D(wx, wy, wrap_angle(self.theta + delta.theta))

    def delta_from(self, prev: "Pose2D") -> "Pose2D":
        """Pose increment, expressed in prev's frame, that maps prev onto self."""
        lx, ly = prev.inverse_transform_point(self.x, self.y)
        return Pose2D(lx, ly, wrap_angle(self.theta - prev.theta))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)


def footprint_corners(pose: Pose2D, length: float, width: float) -> list[tuple[float, float]]:
    """World-frame corners of a rectangle centered on pose (x along heading)."""
    hl, hw = length / 2.0, width / 2.0
    return [
        pose.transform_point(hl, hw),
        pose.transform_point(hl, -hw),
        pose.transform_point(-hl, -hw),
        pose.transform_point(-hl, hw),
    ]
