"""Known-pose log-odds occupancy mapping and portable map persistence."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..geometry import Pose2D

LOG_ODDS_MIN = -6.0
LOG_ODDS_MAX = 6.0
LOG_ODDS_HIT = 0.85
LOG_ODDS_MISS = -0.4
OCCUPIED_P = 0.65


@dataclass
class OccupancyGrid:
    """Believed map: log-odds raster with a world-frame origin (cell (0,0) corner)."""

    resolution: float
    log_odds: np.ndarray                       # float32, shape (ny, nx)
    origin: Pose2D = field(default_factory=Pose2D)

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")

    @classmethod
    def blank(cls, width_m: float, height_m: float, resolution: float = 0.05,
              origin: Pose2D = Pose2D()) -> "OccupancyGrid":
        nx = int(round(width_m / resolution))
        ny = int(round(height_m / resolution))
        return cls(resolution=resolution, log_odds=np.zeros((ny, nx), dtype=np.float32),
                   origin=origin)

    @classmethod
    def from_bool(cls, occupied: np.ndarray, resolution: float,
                  origin: Pose2D = Pose2D()) -> "OccupancyGrid":
        lo = np.where(occupied, LOG_ODDS_MAX, LOG_ODDS_MIN).astype(np.float32)
        return cls(resolution=resolution, log_odds=lo, origin=origin)

    @property
    def nx(self) -> int:
        return self.log_odds.shape[1]

    @property
    def ny(self) -> int:
        return self.log_odds.shape[0]

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor((x - self.origin.x) / self.resolution)),
                int(math.floor((y - self.origin.y) / self.resolution)))

    def center_of(self, ix: int, iy: int) -> tuple[float, float]:
        return (self.origin.x + (ix + 0.5) * self.resolution,
                self.origin.y + (iy + 0.5) * self.resolution)

    def in_bounds_cell(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.nx and 0 <= iy < self.ny

    def probability(self) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.log_odds))

    def occupied_mask(self, p: float = OCCUPIED_P) -> np.ndarray:
        return self.probability() > p

    def save(self, path: str | Path) -> None:
        """Write a P5 PGM raster plus a JSON metadata sidecar.

        Pixel value convention: 0 = occupied, 255 = free, 128 = unknown band.
        """
        path = Path(path)
        p = self.probability()
        img = np.full(p.shape, 128, dtype=np.uint8)
        img[p > OCCUPIED_P] = 0
        img[p < 1.0 - OCCUPIED_P] = 255
        with open(path, "wb") as f:
            f.write(b"P5\n%d %d\n255\n" % (self.nx, self.ny))
            f.write(np.flipud(img).tobytes())
        meta = {"resolution": self.resolution,
                "origin": [self.origin.x, self.origin.y, self.origin.theta],
                "negate": False, "occupied_thresh": OCCUPIED_P}
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "OccupancyGrid":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        with open(path, "rb") as f:
            magic = f.readline().strip()
            if magic != b"P5":
                raise ValueError(f"not a P5 PGM file: {path}")
            dims = f.readline().split()
            nx, ny = int(dims[0]), int(dims[1])
            f.readline()  # maxval
            img = np.frombuffer(f.read(nx * ny), dtype=np.uint8).reshape(ny, nx)
        img = np.flipud(img)
        lo = np.zeros((ny, nx), dtype=np.float32)
        lo[img < 100] = LOG_ODDS_MAX
        lo[img > 200] = LOG_ODDS_MIN
        ox, oy, oth = meta["origin"]
        return cls(resolution=float(meta["resolution"]), log_odds=lo,
                   origin=Pose2D(ox, oy, oth))


def _bresenham(ix0: int, iy0: int, ix1: int, iy1: int) -> list[tuple[int, int]]:
    cells = []
    dx, dy = abs(ix1 - ix0), abs(iy1 - iy0)
    sx = 1 if ix0 < ix1 else -1
    sy = 1 if iy0 < iy1 else -1
    err = dx - dy
    x, y = ix0, iy0
    while True:
        cells.append((x, y))
        if x == ix1 and y == iy1:
            break
        e2 = 2 * err
        if e2 > -dy:
            err -= dy
            x += sx
        if e2 < dx:
            err += dx
            y += sy
    return cells


def integrate_scan(grid: OccupancyGrid, scan: np.ndarray, pose: Pose2D,
                   r_max: float = 10.0) -> OccupancyGrid:
    """Update the grid in place from one 360-ray scan taken at a known pose.

    Cells along each ray get the miss update; the endpoint cell gets the hit
    update unless the ray maxed out. Log-odds stay clamped.
    """
    ix0, iy0 = grid.cell_of(pose.x, pose.y)
    if not grid.in_bounds_cell(ix0, iy0):
        raise ValueError("pose outside grid")
    lo = grid.log_odds
    n = len(scan)
    for i in range(n):
        r = float(scan[i])
        bearing = pose.theta + math.radians(i * 360.0 / n)
        hit = r < r_max - 1e-6
        ex = pose.x + r * math.cos(bearing)
        ey = pose.y + r * math.sin(bearing)
        ix1, iy1 = grid.cell_of(ex, ey)
        cells = _bresenham(ix0, iy0, ix1, iy1)
        for (cx, cy) in cells[:-1]:
            if grid.in_bounds_cell(cx, cy):
                lo[cy, cx] += LOG_ODDS_MISS
        cx, cy = cells[-1]
        if grid.in_bounds_cell(cx, cy):
            lo[cy, cx] += LOG_ODDS_HIT if hit else LOG_ODDS_MISS
    np.clip(lo, LOG_ODDS_MIN, LOG_ODDS_MAX, out=lo)
    return grid
