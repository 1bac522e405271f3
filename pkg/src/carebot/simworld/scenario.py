"""Scenario config loading and validation.

One document (YAML or JSON) with sections grid / robot / doors / people /
objects / dock / seed, plus optional markers / rooms / inventory. The full
schema is documented in docs/scenario.md.
"""

from __future__ import annotations

import json
from pathlib import Path

import yaml

from ..geometry import Pose2D
from .world import (
    BatteryConfig,
    Door,
    FacilityWorld,
    GroundGrid,
    InventorySlot,
    Marker,
    Person,
    RobotBody,
    SimObject,
)


class ConfigInvalid(Exception):
    """Scenario rejected; .details lists every violation found."""

    def __init__(self, details: list[str]):
        self.details = details
        super().__init__("invalid scenario: " + "; ".join(details))


def _pose(value, errors: list[str], where: str) -> Pose2D:
    if not isinstance(value, (list, tuple)) or len(value) not in (2, 3):
        errors.append(f"{where}: pose must be [x, y] or [x, y, theta]")
        return Pose2D()
    try:
        x, y = float(value[0]), float(value[1])
        th = float(value[2]) if len(value) == 3 else 0.0
    except (TypeError, ValueError):
        errors.append(f"{where}: pose entries must be numbers")
        return Pose2D()
    return Pose2D(x, y, th)


def load_scenario(config: dict) -> FacilityWorld:
    """Build a reproducible world from a parsed config dict.

    Raises ConfigInvalid listing every violation rather than stopping at the
    first one.
    """
    errors: list[str] = []
    if not isinstance(config, dict):
        raise ConfigInvalid(["top level must be a mapping"])

    gcfg = config.get("grid")
    if not isinstance(gcfg, dict):
        errors.append("grid: section missing")
        gcfg = {}
    size = gcfg.get("size", [5.0, 5.0])
    resolution = float(gcfg.get("resolution", 0.05))
    if resolution <= 0:
        errors.append("grid.resolution: must be > 0")
        resolution = 0.05
    try:
        width_m, height_m = float(size[0]), float(size[1])
    except (TypeError, ValueError, IndexError):
        errors.append("grid.size: must be [width_m, height_m]")
        width_m = height_m = 5.0
    if width_m <= 0 or height_m <= 0:
        errors.append("grid.size: dimensions must be > 0")
        width_m = max(width_m, 1.0)
        height_m = max(height_m, 1.0)
    grid = GroundGrid.empty_room(width_m, height_m, resolution,
                                 border=bool(gcfg.get("border", True)))
    for i, rect in enumerate(gcfg.get("walls", []) or []):
        if not isinstance(rect, (list, tuple)) or len(rect) != 4:
            errors.append(f"grid.walls[{i}]: must be [x0, y0, x1, y1]")
            continue
        grid.mark_rect(*[float(v) for v in rect])
    for i, rect in enumerate(gcfg.get("hazards", []) or []):
        if not isinstance(rect, (list, tuple)) or len(rect) != 4:
            errors.append(f"grid.hazards[{i}]: must be [x0, y0, x1, y1]")
            continue
        grid.mark_rect(*[float(v) for v in rect], layer="hazard")

    def check_bounds(pose: Pose2D, where: str):
        if not grid.in_bounds(pose.x, pose.y):
            errors.append(f"{where}: pose ({pose.x}, {pose.y}) outside grid bounds")

    rcfg = config.get("robot") or {}
    robot_pose = _pose(rcfg.get("pose", [width_m / 2, height_m / 2, 0.0]), errors, "robot.pose")
    check_bounds(robot_pose, "robot")
    battery = float(rcfg.get("battery", 1.0))
    if not 0.0 <= battery <= 1.0:
        errors.append("robot.battery: must be in [0, 1]")
        battery = min(1.0, max(0.0, battery))
    robot = RobotBody(pose=robot_pose, battery=battery)

    doors = []
    for i, d in enumerate(config.get("doors") or []):
        pose = _pose(d.get("pose"), errors, f"doors[{i}].pose")
        check_bounds(pose, f"doors[{i}]")
        doors.append(Door(name=str(d.get("name", f"door_{i}")), pose=pose,
                          width=float(d.get("width", 0.9)),
                          open=bool(d.get("open", False)),
                          marker_id=int(d.get("marker", -1))))

    people = []
    for i, p in enumerate(config.get("people") or []):
        pose = _pose(p.get("pose"), errors, f"people[{i}].pose")
        check_bounds(pose, f"people[{i}]")
        temp = float(p.get("temp_k", 310.0))
        if not 250.0 <= temp <= 320.0:
            errors.append(f"people[{i}].temp_k: {temp} outside plausible band [250, 320]")
        people.append(Person(name=str(p.get("name", f"person_{i}")), pose=pose,
                             body_temp_k=temp, glasses=bool(p.get("glasses", False)),
                             compliance=str(p.get("compliance", "static")),
                             waypoints=[tuple(map(float, w)) for w in p.get("waypoints", [])],
                             speed=float(p.get("speed", 0.5)),
                             retreat=tuple(map(float, p["retreat"])) if p.get("retreat") else None))

    objects = []
    for i, o in enumerate(config.get("objects") or []):
        pose = _pose(o.get("pose"), errors, f"objects[{i}].pose")
        check_bounds(pose, f"objects[{i}]")
        width_mm = float(o.get("width_mm", 60.0))
        if not 0.0 < width_mm <= 130.0:
            errors.append(f"objects[{i}].width_mm: {width_mm} outside gripper range (0, 130]")
        objects.append(SimObject(name=str(o.get("name", f"object_{i}")),
                                 cls=str(o.get("class", "unknown")), pose=pose,
                                 width_mm=width_mm))

    markers = []
    for i, m in enumerate(config.get("markers") or []):
        pose = _pose(m.get("pose"), errors, f"markers[{i}].pose")
        check_bounds(pose, f"markers[{i}]")
        markers.append(Marker(marker_id=int(m.get("id", i)), pose=pose,
                              kind=str(m.get("kind", "generic"))))

    dock = _pose(config.get("dock", [width_m / 2, height_m / 2, 0.0]), errors, "dock")
    check_bounds(dock, "dock")

    rooms = {}
    for name, value in (config.get("rooms") or {}).items():
        pose = _pose(value, errors, f"rooms.{name}")
        check_bounds(pose, f"rooms.{name}")
        rooms[str(name)] = pose

    inventory = [InventorySlot(name=str(s.get("name", f"slot_{i}")),
                               item=s.get("item"))
                 for i, s in enumerate(config.get("inventory") or [])]

    seed = int(config.get("seed", 0))

    bcfg = config.get("battery") or {}
    battery_config = BatteryConfig(
        drive_drain=float(bcfg.get("drive_drain", BatteryConfig.drive_drain)),
        idle_fraction=float(bcfg.get("idle_fraction", BatteryConfig.idle_fraction)),
        charge_rate=float(bcfg.get("charge_rate", BatteryConfig.charge_rate)),
    )

    if errors:
        raise ConfigInvalid(errors)
    return FacilityWorld(grid=grid, robot=robot, dock=dock, doors=doors, people=people,
                         objects=objects, markers=markers, inventory=inventory,
                         rooms=rooms, seed=seed, battery_config=battery_config)


def load_scenario_file(path: str | Path) -> FacilityWorld:
    """Load a scenario document; YAML and JSON are both accepted."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        config = json.loads(text)
    else:
        config = yaml.safe_load(text)
    return load_scenario(config)


def parse_scenario_text(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return yaml.safe_load(text)
