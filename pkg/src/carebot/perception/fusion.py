"""Grasp-target fusion (detection + pointcloud + platform pose) and person
proximity checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import Pose2D
from ..simworld.world import FacilityWorld


class FusionFailed(Exception):
    pass


@dataclass
class GraspTarget:
    cls: str
    point: np.ndarray            # (3,) map frame
    approach: np.ndarray         # unit 3-vector
    confidence: float


def object_pointcloud(world: FacilityWorld, object_name: str, n: int = 60,
                      rng: np.random.Generator | None = None,
                      jitter: float = 0.004) -> np.ndarray:
    """Oracle depth points for an object, in the platform frame.

    Empty when the object is not in the camera view (detection and depth share
    the frontal frustum).
    """
    rng = rng or np.random.default_rng(world.rng_seed)
    if object_name not in {v.ident for v in world.camera_view() if v.kind == "object"}:
        return np.zeros((0, 3))
    obj = world.find_object(object_name)
    if obj is None:
        return np.zeros((0, 3))
    lx, ly = world.robot.pose.inverse_transform_point(obj.pose.x, obj.pose.y)
    half = obj.width_mm / 2000.0
    pts = np.empty((n, 3))
    pts[:, 0] = lx + rng.normal(0, jitter, n)
    pts[:, 1] = ly + rng.normal(0, jitter, n)
    pts[:, 2] = rng.uniform(0.0, 2 * half, n)      # floor object height band
    return pts


def fuse_grasp_target(cls: str, points_local: np.ndarray,
                      platform_pose: Pose2D) -> GraspTarget:
    """Fuse a classified detection with its depth points into a map-frame
    grasp target; approach comes from above for floor objects."""
    pts = np.asarray(points_local, dtype=float)
    if pts.size == 0:
        raise FusionFailed("no points in detection region")
    centroid = pts.mean(axis=0)
    mx, my = platform_pose.transform_point(float(centroid[0]), float(centroid[1]))
    point = np.array([mx, my, float(centroid[2])])
    approach = np.array([0.0, 0.0, -1.0])
    confidence = min(1.0, len(pts) / 30.0)
    return GraspTarget(cls=cls, point=point, approach=approach, confidence=confidence)


def person_near(world: FacilityWorld, radius: float,
                center: Pose2D | None = None) -> bool:
    """True iff any person is within radius of the robot (closed boundary:
    a person exactly at the radius counts as near)."""
    if radius <= 0:
        raise ValueError("radius must be > 0")
    ref = center or world.robot.pose
    for p in world.people:
        if math.hypot(p.pose.x - ref.x, p.pose.y - ref.y) <= radius:
            return True
    return False
