"""Layered costmap: base occupancy, inflation, and time-windowed no-go polygons."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .mapping import OccupancyGrid

# Half of the 790x580 mm footprint diagonal.
INFLATION_RADIUS = 0.49


def minutes_of_day(sim_time_s: float) -> float:
    """Map the sim clock to wall-clock minutes of day (clock starts at 00:00)."""
    return (sim_time_s / 60.0) % 1440.0


def parse_hhmm(text: str) -> int:
    h, m = text.strip().split(":")
    h, m = int(h), int(m)
    if not (0 <= h < 24 and 0 <= m < 60):
        raise ValueError(f"bad HH:MM time: {text!r}")
    return h * 60 + m


def parse_window(text: str) -> tuple[int, int]:
    """Parse 'HH:MM-HH:MM'; windows may wrap midnight."""
    a, b = text.split("-")
    return (parse_hhmm(a), parse_hhmm(b))


def window_active(window: tuple[int, int], minute: float) -> bool:
    start, end = window
    if start <= end:
        return start <= minute < end
    return minute >= start or minute < end   # wraps midnight


@dataclass
class VirtualLayer:
    """Operator-drawn forbidden polygon, optionally limited to time windows."""

    polygon: list[tuple[float, float]]
    windows: list[tuple[int, int]] = field(default_factory=list)   # minutes; empty = always on
    label: str = ""

    def active_at(self, sim_time_s: float) -> bool:
        if not self.windows:
            return True
        minute = minutes_of_day(sim_time_s)
        return any(window_active(w, minute) for w in self.windows)

    def contains(self, x: float, y: float) -> bool:
        return _point_in_polygon(x, y, self.polygon)

    def to_dict(self) -> dict:
        return {"label": self.label,
                "polygon": [[px, py] for px, py in self.polygon],
                "windows": [f"{s // 60:02d}:{s % 60:02d}-{e // 60:02d}:{e % 60:02d}"
                            for s, e in self.windows]}

    @classmethod
    def from_dict(cls, d: dict) -> "VirtualLayer":
        return cls(polygon=[(float(p[0]), float(p[1])) for p in d["polygon"]],
                   windows=[parse_window(w) for w in d.get("windows", [])],
                   label=str(d.get("label", "")))


def _point_in_polygon(x: float, y: float, poly: list[tuple[float, float]]) -> bool:
    inside = False
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            t = (y - y0) / (y1 - y0)
            if x < x0 + t * (x1 - x0):
                inside = not inside
    return inside


def _rasterize_polygon(poly: list[tuple[float, float]], grid: OccupancyGrid) -> np.ndarray:
    mask = np.zeros((grid.ny, grid.nx), dtype=bool)
    if len(poly) < 3:
        return mask
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    i0, j0 = grid.cell_of(min(xs), min(ys))
    i1, j1 = grid.cell_of(max(xs), max(ys))
    i0, j0 = max(i0, 0), max(j0, 0)
    i1, j1 = min(i1, grid.nx - 1), min(j1, grid.ny - 1)
    for j in range(j0, j1 + 1):
        for i in range(i0, i1 + 1):
            cx, cy = grid.center_of(i, j)
            if _point_in_polygon(cx, cy, poly):
                mask[j, i] = True
    return mask


class CostmapStack:
    """Base occupancy + inflation + virtual layers.

    A cell is blocked iff base-occupied, within the inflation radius of an
    occupied cell, or inside a virtual layer active at the query time.
    """

    def __init__(self, base: OccupancyGrid, layers: list[VirtualLayer] | None = None,
                 inflation_radius: float = INFLATION_RADIUS):
        self.base = base
        self.layers = layers or []
        self.inflation_radius = inflation_radius
        self._static_blocked: np.ndarray | None = None
        self._layer_masks: list[np.ndarray] | None = None

    def invalidate(self) -> None:
        self._static_blocked = None
        self._layer_masks = None

    def _static_mask(self) -> np.ndarray:
        if self._static_blocked is None:
            occ = self.base.occupied_mask()
            if self.inflation_radius > 0:
                free_dist = ndimage.distance_transform_edt(~occ) * self.base.resolution
                self._static_blocked = free_dist <= self.inflation_radius
            else:
                self._static_blocked = occ
        return self._static_blocked

    def _masks(self) -> list[np.ndarray]:
        if self._layer_masks is None or len(self._layer_masks) != len(self.layers):
            self._layer_masks = [_rasterize_polygon(l.polygon, self.base) for l in self.layers]
        return self._layer_masks

    def blocked_mask(self, at_time: float) -> np.ndarray:
        mask = self._static_mask().copy()
        for layer, lmask in zip(self.layers, self._masks()):
            if layer.active_at(at_time):
                mask |= lmask
        return mask

    def blocked_cell(self, ix: int, iy: int, at_time: float) -> bool:
        if not self.base.in_bounds_cell(ix, iy):
            return True
        if self._static_mask()[iy, ix]:
            return True
        cx, cy = self.base.center_of(ix, iy)
        return any(l.active_at(at_time) and l.contains(cx, cy) for l in self.layers)

    def blocked_point(self, x: float, y: float, at_time: float) -> bool:
        ix, iy = self.base.cell_of(x, y)
        return self.blocked_cell(ix, iy, at_time)

    def in_active_layer(self, x: float, y: float, at_time: float) -> bool:
        return any(l.active_at(at_time) and l.contains(x, y) for l in self.layers)

    # -- layer persistence ---------------------------------------------------

    def save_layers(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps([l.to_dict() for l in self.layers], indent=2) + "\n")

    def load_layers(self, path: str | Path) -> None:
        data = json.loads(Path(path).read_text())
        self.layers = [VirtualLayer.from_dict(d) for d in data]
        self.invalidate()
