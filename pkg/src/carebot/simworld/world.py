"""Deterministic 2D care-facility simulation.

Single source of ground truth: grid, doors, people, objects, dock and the
robot body. Everything is advanced by an owning tick loop through step();
all sensor data is synthesized from this state.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..geometry import Pose2D, footprint_corners, wrap_angle

SIM_DT = 0.05                 # 20 Hz base tick, commands zero-order held
MAX_SPEED = 1.0               # m/s hard cap on platform speed
MAX_OMEGA = 2.0               # rad/s, declared default (not a published figure)
FOOTPRINT_LENGTH = 0.790
FOOTPRINT_WIDTH = 0.580
LIDAR_RAYS = 360
LIDAR_RANGE = 10.0
PERSON_RADIUS = 0.25
PROXIMITY_SECTORS = 12
PROXIMITY_RANGE = 2.0
CAMERA_FOV = math.radians(87.0)
CAMERA_RANGE = 4.0
CAMERA_W, CAMERA_H = 640, 480


class LedState(str, Enum):
    IDLE = "idle"
    DRIVING_LEFT = "driving_left"
    DRIVING_RIGHT = "driving_right"
    DRIVING_STRAIGHT = "driving_straight"
    WARNING = "warning"
    CHARGING = "charging"


@dataclass
class DriveCmd:
    v: float = 0.0
    omega: float = 0.0


@dataclass
class BatteryConfig:
    drive_drain: float = 1.0 / (8.0 * 3600.0)   # full-to-empty in 8 h of driving
    idle_fraction: float = 0.25                 # idle drain as fraction of drive drain
    charge_rate: float = 1.0 / 7200.0           # empty-to-full in 2 h on the dock


def battery_tick(battery: float, dt: float, driving: bool, docked: bool,
                 cfg: BatteryConfig | None = None) -> float:
    """Book-keeping battery model: drains unless docked, saturates at [0, 1]."""
    cfg = cfg or BatteryConfig()
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if docked:
        battery += cfg.charge_rate * dt
    elif driving:
        battery -= cfg.drive_drain * dt
    else:
        battery -= cfg.drive_drain * cfg.idle_fraction * dt
    return min(1.0, max(0.0, battery))


@dataclass
class GroundGrid:
    """Ground-truth occupancy raster; cell (ix, iy) covers [i*res, (i+1)*res)."""

    resolution: float
    occupied: np.ndarray          # bool, shape (ny, nx)
    hazard: np.ndarray | None = None   # floor edges / stairs, same shape

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("grid resolution must be > 0")
        if self.hazard is None:
            self.hazard = np.zeros_like(self.occupied, dtype=bool)

    @property
    def nx(self) -> int:
        return self.occupied.shape[1]

    @property
    def ny(self) -> int:
        return self.occupied.shape[0]

    @property
    def width_m(self) -> float:
        return self.nx * self.resolution

    @property
    def height_m(self) -> float:
        return self.ny * self.resolution

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor(x / self.resolution)), int(math.floor(y / self.resolution)))

    def in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x < self.width_m and 0.0 <= y < self.height_m

    def mark_rect(self, x0: float, y0: float, x1: float, y1: float,
                  value: bool = True, layer: str = "occupied") -> None:
        arr = self.occupied if layer == "occupied" else self.hazard
        i0 = max(0, int(math.floor(min(x0, x1) / self.resolution)))
        j0 = max(0, int(math.floor(min(y0, y1) / self.resolution)))
        i1 = min(self.nx, int(math.ceil(max(x0, x1) / self.resolution)))
        j1 = min(self.ny, int(math.ceil(max(y0, y1) / self.resolution)))
        arr[j0:j1, i0:i1] = value

    @classmethod
    def empty_room(cls, width_m: float, height_m: float, resolution: float = 0.05,
                   border: bool = True) -> "GroundGrid":
        nx = int(round(width_m / resolution))
        ny = int(round(height_m / resolution))
        occ = np.zeros((ny, nx), dtype=bool)
        if border:
            occ[0, :] = occ[-1, :] = True
            occ[:, 0] = occ[:, -1] = True
        return cls(resolution=resolution, occupied=occ)


@dataclass
class Door:
    name: str
    pose: Pose2D                 # center of the doorway, theta along the leaf
    width: float = 0.9
    open: bool = False
    marker_id: int = -1


@dataclass
class Person:
    name: str
    pose: Pose2D
    body_temp_k: float = 310.0
    glasses: bool = False
    compliance: str = "static"     # static | loop | helpful
    waypoints: list[tuple[float, float]] = field(default_factory=list)
    speed: float = 0.5
    _wp_index: int = 0
    asked_to_move: bool = False
    retreat: tuple[float, float] | None = None

    def step(self, dt: float) -> None:
        target: tuple[float, float] | None = None
        if self.asked_to_move and self.retreat is not None:
            target = self.retreat
        elif self.compliance == "loop" and self.waypoints:
            target = self.waypoints[self._wp_index]
        if target is None:
            return
        dx, dy = target[0] - self.pose.x, target[1] - self.pose.y
        dist = math.hypot(dx, dy)
        if dist < 1e-6:
            if self.compliance == "loop" and self.waypoints and not self.asked_to_move:
                self._wp_index = (self._wp_index + 1) % len(self.waypoints)
            return
        s = min(dist, self.speed * dt)
        self.pose = Pose2D(self.pose.x + s * dx / dist, self.pose.y + s * dy / dist,
                           math.atan2(dy, dx))


@dataclass
class SimObject:
    name: str
    cls: str
    pose: Pose2D
    width_mm: float = 60.0


@dataclass
class Marker:
    marker_id: int
    pose: Pose2D
    kind: str = "generic"        # door_handle | disinfect | generic


@dataclass
class InventorySlot:
    name: str
    item: str | None = None


@dataclass
class RobotBody:
    pose: Pose2D = field(default_factory=Pose2D)
    v: float = 0.0
    omega: float = 0.0
    bumpers: list[bool] = field(default_factory=lambda: [False] * 4)   # front, left, back, right
    floor_sensors: list[bool] = field(default_factory=lambda: [False] * 4)
    battery: float = 1.0
    estop: bool = False
    led_state: LedState = LedState.IDLE
    docked: bool = False
    warning: bool = False
    held_item: str | None = None


@dataclass
class Visible:
    kind: str                    # person | object | marker | door
    ident: str
    distance: float
    bearing: float               # relative to camera axis, rad
    bbox: tuple[int, int, int, int]   # x0, y0, x1, y1 in a 640x480 image


@dataclass
class SensorFrame:
    lidar: np.ndarray
    proximity_ring: np.ndarray
    camera: list[Visible]
    stamp: float

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.lidar.astype(np.float64).tobytes())
        h.update(self.proximity_ring.astype(np.float64).tobytes())
        for v in self.camera:
            h.update(v.kind.encode())
            h.update(v.ident.encode())
            h.update(struct.pack("<dd4i", v.distance, v.bearing, *v.bbox))
        h.update(struct.pack("<d", self.stamp))
        return h.hexdigest()


class FacilityWorld:
    """Ground-truth facility state plus the robot body and sim clock."""

    def __init__(self, grid: GroundGrid, robot: RobotBody, dock: Pose2D,
                 doors: list[Door] | None = None, people: list[Person] | None = None,
                 objects: list[SimObject] | None = None, markers: list[Marker] | None = None,
                 inventory: list[InventorySlot] | None = None,
                 rooms: dict[str, Pose2D] | None = None, seed: int = 0,
                 battery_config: BatteryConfig | None = None):
        self.grid = grid
        self.robot = robot
        self.dock = dock
        self.doors = doors or []
        self.people = people or []
        self.objects = objects or []
        self.markers = markers or []
        self.inventory = inventory or []
        self.rooms = rooms or {}
        self.clock = 0.0
        self.rng_seed = seed
        self.rng = np.random.default_rng(seed)
        self.battery_config = battery_config or BatteryConfig()
        self.odometer = 0.0            # integrated ground-truth path length, m
        self._occ_cache: np.ndarray | None = None
        self._occ_doors_key: tuple | None = None

    # -- occupancy ---------------------------------------------------------

    def effective_occupancy(self) -> np.ndarray:
        """Static occupancy plus the cells of currently closed doors."""
        key = tuple(sorted((d.name, d.open) for d in self.doors))
        if self._occ_cache is None or key != self._occ_doors_key:
            occ = self.grid.occupied.copy()
            res = self.grid.resolution
            for d in self.doors:
                if d.open:
                    continue
                half = d.width / 2.0
                n = max(2, int(math.ceil(d.width / (res / 2.0))))
                for t in np.linspace(-half, half, n):
                    px, py = d.pose.transform_point(t, 0.0)
                    ix, iy = self.grid.cell_of(px, py)
                    if 0 <= ix < self.grid.nx and 0 <= iy < self.grid.ny:
                        occ[iy, ix] = True
            self._occ_cache = occ
            self._occ_doors_key = key
        return self._occ_cache

    def footprint_collides(self, pose: Pose2D) -> bool:
        """True if the robot rectangle at pose overlaps an occupied cell or leaves the grid."""
        corners = footprint_corners(pose, FOOTPRINT_LENGTH, FOOTPRINT_WIDTH)
        for cx, cy in corners:
            if not self.grid.in_bounds(cx, cy):
                return True
        occ = self.effective_occupancy()
        res = self.grid.resolution
        xs = [c[0] for c in corners]
        ys = [c[1] for c in corners]
        i0 = max(0, int(math.floor(min(xs) / res)))
        j0 = max(0, int(math.floor(min(ys) / res)))
        i1 = min(self.grid.nx - 1, int(math.floor(max(xs) / res)))
        j1 = min(self.grid.ny - 1, int(math.floor(max(ys) / res)))
        sub = occ[j0:j1 + 1, i0:i1 + 1]
        if not sub.any():
            return False
        jj, ii = np.nonzero(sub)
        cxs = (ii + i0 + 0.5) * res
        cys = (jj + j0 + 0.5) * res
        c, s = math.cos(pose.theta), math.sin(pose.theta)
        dx, dy = cxs - pose.x, cys - pose.y
        lx = c * dx + s * dy
        ly = -s * dx + c * dy
        margin = res * 0.5
        inside = (np.abs(lx) <= FOOTPRINT_LENGTH / 2 + margin) & \
                 (np.abs(ly) <= FOOTPRINT_WIDTH / 2 + margin)
        return bool(inside.any())

    # -- sensors -----------------------------------------------------------

    def lidar_scan(self) -> np.ndarray:
        """360 ranges (1 deg spacing, starting at robot heading), capped at LIDAR_RANGE."""
        pose = self.robot.pose
        if not self.grid.in_bounds(pose.x, pose.y):
            raise ValueError("robot outside grid")
        occ = self.effective_occupancy()
        res = self.grid.resolution
        bearings = pose.theta + np.deg2rad(np.arange(LIDAR_RAYS, dtype=np.float64))
        dirx = np.cos(bearings)
        diry = np.sin(bearings)
        step_len = res / 2.0
        ts = np.arange(1, int(LIDAR_RANGE / step_len) + 1, dtype=np.float64) * step_len
        px = pose.x + np.outer(dirx, ts)
        py = pose.y + np.outer(diry, ts)
        ix = np.floor(px / res).astype(np.int64)
        iy = np.floor(py / res).astype(np.int64)
        inside = (ix >= 0) & (ix < self.grid.nx) & (iy >= 0) & (iy < self.grid.ny)
        hit = np.zeros_like(inside)
        hit[inside] = occ[iy[inside], ix[inside]]
        first = np.argmax(hit, axis=1)
        any_hit = hit.any(axis=1)
        ranges = np.where(any_hit, ts[first], LIDAR_RANGE)
        # people are sensed as discs, merged analytically
        for p in self.people:
            ox, oy = p.pose.x - pose.x, p.pose.y - pose.y
            b = dirx * ox + diry * oy                     # ray-parameter of closest approach
            c = ox * ox + oy * oy - PERSON_RADIUS ** 2
            disc = b * b - c
            ok = (disc >= 0) & (b > 0)
            t_hit = b - np.sqrt(np.where(ok, disc, 0.0))
            ok &= t_hit > 0
            ranges = np.where(ok & (t_hit < ranges), t_hit, ranges)
        return np.minimum(ranges, LIDAR_RANGE)

    def proximity_ring(self, scan: np.ndarray | None = None) -> np.ndarray:
        """Nearest obstacle per 30-degree sector around the platform, capped at 2 m."""
        scan = self.lidar_scan() if scan is None else scan
        sector = scan.reshape(PROXIMITY_SECTORS, LIDAR_RAYS // PROXIMITY_SECTORS)
        return np.minimum(sector.min(axis=1), PROXIMITY_RANGE)

    def camera_view(self) -> list[Visible]:
        """Oracle camera: ground-truth entities inside the frontal frustum, unoccluded."""
        out: list[Visible] = []
        pose = self.robot.pose
        occ = self.effective_occupancy()
        res = self.grid.resolution

        def los_clear(tx: float, ty: float) -> bool:
            dist = math.hypot(tx - pose.x, ty - pose.y)
            if dist < 1e-6:
                return True
            n = max(2, int(dist / (res / 2.0)))
            for k in range(1, n):
                x = pose.x + (tx - pose.x) * k / n
                y = pose.y + (ty - pose.y) * k / n
                ix, iy = self.grid.cell_of(x, y)
                if 0 <= ix < self.grid.nx and 0 <= iy < self.grid.ny and occ[iy, ix]:
                    return False
            return True

        def consider(kind: str, ident: str, x: float, y: float, size_m: float):
            dist = math.hypot(x - pose.x, y - pose.y)
            if dist > CAMERA_RANGE or dist < 1e-6:
                return
            bearing = wrap_angle(math.atan2(y - pose.y, x - pose.x) - pose.theta)
            if abs(bearing) > CAMERA_FOV / 2:
                return
            if not los_clear(x, y):
                return
            u = CAMERA_W / 2 - bearing / (CAMERA_FOV / 2) * (CAMERA_W / 2)
            half_px = max(4.0, size_m / dist * 300.0)
            x0, x1 = int(u - half_px), int(u + half_px)
            y0, y1 = int(CAMERA_H / 2 - half_px), int(CAMERA_H / 2 + half_px)
            out.append(Visible(kind, ident, dist, bearing, (x0, y0, x1, y1)))

        for p in self.people:
            consider("person", p.name, p.pose.x, p.pose.y, 0.5)
        for o in self.objects:
            consider("object", o.name, o.pose.x, o.pose.y, o.width_mm / 1000.0)
        for m in self.markers:
            consider("marker", str(m.marker_id), m.pose.x, m.pose.y, 0.1)
        for d in self.doors:
            consider("door", d.name, d.pose.x, d.pose.y, d.width)
        return out

    def sensor_frame(self) -> SensorFrame:
        scan = self.lidar_scan()
        return SensorFrame(lidar=scan, proximity_ring=self.proximity_ring(scan),
                           camera=self.camera_view(), stamp=self.clock)

    # -- helpers -----------------------------------------------------------

    def person_positions(self) -> list[tuple[float, float]]:
        return [(p.pose.x, p.pose.y) for p in self.people]

    def nearest_person_distance(self) -> float:
        if not self.people:
            return math.inf
        rp = self.robot.pose
        return min(math.hypot(p.pose.x - rp.x, p.pose.y - rp.y) for p in self.people)

    def find_object(self, name: str) -> SimObject | None:
        for o in self.objects:
            if o.name == name:
                return o
        return None

    def slot_with_item(self, item: str, skip: set[str] = frozenset()) -> InventorySlot | None:
        for s in self.inventory:
            if s.item == item and s.name not in skip:
                return s
        return None

    def free_slot(self) -> InventorySlot | None:
        for s in self.inventory:
            if s.item is None:
                return s
        return None

    def state_hash(self) -> str:
        h = hashlib.sha256()
        r = self.robot
        h.update(struct.pack("<7d", r.pose.x, r.pose.y, r.pose.theta, r.v, r.omega,
                             r.battery, self.clock))
        h.update(bytes(r.bumpers) + bytes(r.floor_sensors))
        h.update(struct.pack("<??", r.estop, r.docked))
        for p in self.people:
            h.update(struct.pack("<3d", p.pose.x, p.pose.y, p.pose.theta))
        for d in self.doors:
            h.update(struct.pack("<?", d.open))
        return h.hexdigest()


def _facing_bumper(v: float, omega: float) -> int:
    """Index of the single bumper set by a blocked step: 0 front, 1 left, 2 back, 3 right."""
    if abs(v) >= 1e-6:
        return 0 if v > 0 else 2
    return 1 if omega > 0 else 3


def step(world: FacilityWorld, cmd: DriveCmd, dt: float = SIM_DT) -> FacilityWorld:
    """Advance the world by dt under a drive command (mutates and returns world).

    Commands are clamped (never rejected); estop forces zero motion; a step
    whose footprint would overlap occupied space sets exactly one bumper and
    leaves the pose at the last legal value.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    r = world.robot
    v = min(MAX_SPEED, max(-MAX_SPEED, cmd.v))
    omega = min(MAX_OMEGA, max(-MAX_OMEGA, cmd.omega))
    if r.estop:
        v = omega = 0.0

    r.bumpers = [False] * 4
    moving = abs(v) > 1e-9 or abs(omega) > 1e-9
    if moving:
        r.docked = False
        th = r.pose.theta
        if abs(omega) < 1e-12:
            nx = r.pose.x + v * math.cos(th) * dt
            ny = r.pose.y + v * math.sin(th) * dt
            nth = th
        else:
            nth = th + omega * dt
            nx = r.pose.x + v / omega * (math.sin(nth) - math.sin(th))
            ny = r.pose.y - v / omega * (math.cos(nth) - math.cos(th))
        new_pose = Pose2D(nx, ny, wrap_angle(nth))
        if world.footprint_collides(new_pose):
            r.bumpers[_facing_bumper(v, omega)] = True
            r.v = r.omega = 0.0
        else:
            world.odometer += math.hypot(nx - r.pose.x, ny - r.pose.y)
            r.pose = new_pose
            r.v, r.omega = v, omega
    else:
        r.v = r.omega = 0.0

    # floor sensors at the four footprint corners
    hz = world.grid.hazard
    for i, (cx, cy) in enumerate(footprint_corners(r.pose, FOOTPRINT_LENGTH, FOOTPRINT_WIDTH)):
        ix, iy = world.grid.cell_of(cx, cy)
        inside = 0 <= ix < world.grid.nx and 0 <= iy < world.grid.ny
        r.floor_sensors[i] = bool(hz[iy, ix]) if inside else True

    driving = abs(r.v) > 1e-9 or abs(r.omega) > 1e-9
    r.battery = battery_tick(r.battery, dt, driving=driving, docked=r.docked,
                             cfg=world.battery_config)

    for p in world.people:
        p.step(dt)

    if r.estop or r.warning:
        r.led_state = LedState.WARNING
    elif r.docked:
        r.led_state = LedState.CHARGING
    elif r.omega > 0.1:
        r.led_state = LedState.DRIVING_LEFT
    elif r.omega < -0.1:
        r.led_state = LedState.DRIVING_RIGHT
    elif abs(r.v) > 0.02:
        r.led_state = LedState.DRIVING_STRAIGHT
    else:
        r.led_state = LedState.IDLE

    world.clock += dt
    return world
