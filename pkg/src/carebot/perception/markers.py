"""Fiducial marker detection from the oracle camera."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..simworld.world import FacilityWorld

MARKER_MOUNT_HEIGHT = 0.9    # meters above the floor plane


@dataclass
class MarkerObservation:
    marker_id: int
    pose_cam: np.ndarray         # (6,) x, y, z, roll, pitch, yaw in the camera frame
    stddev: np.ndarray           # per-axis noise applied


def detect_markers(world: FacilityWorld, noise_sigma: float = 0.0,
                   rng: np.random.Generator | None = None) -> list[MarkerObservation]:
    """Report every ground-truth marker inside the camera frustum, with
    Gaussian pose noise; markers outside the frustum are never reported."""
    rng = rng or np.random.default_rng(0)
    robot = world.robot.pose
    out: list[MarkerObservation] = []
    visible = {v.ident for v in world.camera_view() if v.kind == "marker"}
    for m in world.markers:
        if str(m.marker_id) not in visible:
            continue
        lx, ly = robot.inverse_transform_point(m.pose.x, m.pose.y)
        yaw = m.pose.theta - robot.theta
        pose = np.array([lx, ly, MARKER_MOUNT_HEIGHT, 0.0, 0.0, yaw])
        std = np.array([noise_sigma, noise_sigma, noise_sigma, 0.0, 0.0, noise_sigma])
        if noise_sigma > 0:
            pose = pose + rng.normal(0.0, 1.0, 6) * std
        out.append(MarkerObservation(marker_id=m.marker_id, pose_cam=pose, stddev=std))
    return out
