"""Two-finger gripper: position/force control, grasp verification and
proximity-signature object classification."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

MAX_WIDTH = 130.0            # mm
N_PROXIMITY = 9              # 1 base + 4 per finger
FORCE_LIMIT = 20.0           # N
FORCE_PER_MM = 0.5           # contact model: force ramps with commanded over-closure
CONTACT_FORCE = 0.5          # minimum force that counts as holding something
PRESENCE_DIST = 0.10         # base proximity below this means an object is inside
EMPTY_PROXIMITY = 0.5        # reading with nothing in the hand


class WidthOutOfRange(Exception):
    pass


@dataclass
class GripperState:
    width: float = MAX_WIDTH                 # mm
    finger_angle: float = 0.0                # rad, 0 = fully open
    force: float = 0.0                       # N
    proximity: np.ndarray = field(default_factory=lambda: np.full(N_PROXIMITY, EMPTY_PROXIMITY))

    def feature_vector(self) -> np.ndarray:
        """Normalized (width, proximity...) vector used for classification."""
        return np.concatenate([[self.width / MAX_WIDTH],
                               np.asarray(self.proximity) / EMPTY_PROXIMITY])


def _finger_angle(width: float) -> float:
    return (1.0 - width / MAX_WIDTH) * (np.pi / 3.0)


def object_proximity_signature(cls: str, width_mm: float) -> np.ndarray:
    """Deterministic per-class sensor pattern for a held object.

    Stands in for the learned signatures: same class and size always produce
    the same readings.
    """
    digest = hashlib.sha256(cls.encode()).digest()
    pattern = np.array([b / 255.0 for b in digest[:N_PROXIMITY]])
    base = 0.02 + 0.03 * pattern
    base[0] = 0.01 + 0.0005 * width_mm       # base sensor scales with object size
    return base


def grip_to(target_width: float | None = None, target_force: float | None = None,
            object_width_mm: float | None = None,
            object_cls: str | None = None) -> GripperState:
    """Close or open the fingers to a width or force setpoint.

    Contact model: fingers stop rigidly at the object width; force ramps
    linearly with the commanded closure beyond contact and saturates at the
    force limit.
    """
    if (target_width is None) == (target_force is None):
        raise ValueError("exactly one of target_width / target_force required")

    if target_width is not None:
        if not 0.0 <= target_width <= MAX_WIDTH:
            raise WidthOutOfRange(f"width {target_width} mm outside [0, {MAX_WIDTH}]")
        if object_width_mm is not None and target_width < object_width_mm:
            width = float(object_width_mm)
            force = min(FORCE_LIMIT, FORCE_PER_MM * (object_width_mm - target_width))
        else:
            width = float(target_width)
            force = 0.0
    else:
        if target_force < 0:
            raise ValueError("force setpoint must be >= 0")
        if object_width_mm is not None:
            width = float(object_width_mm)
            force = min(FORCE_LIMIT, float(target_force))
        else:
            width = 0.0
            force = 0.0                      # closed on air: no contact force

    if object_width_mm is not None and width <= object_width_mm + 1e-9 and force > 0:
        proximity = object_proximity_signature(object_cls or "unknown", object_width_mm)
    else:
        proximity = np.full(N_PROXIMITY, EMPTY_PROXIMITY)
    return GripperState(width=width, finger_angle=_finger_angle(width),
                        force=force, proximity=proximity)


def verify_grasp(gs: GripperState, expected_width: float, tol: float) -> bool:
    """Grasp sanity check: finger width near the expected object width AND
    contact force present AND the base proximity sensor sees something."""
    if tol <= 0:
        raise ValueError("tol must be > 0")
    return (abs(gs.width - expected_width) <= tol
            and gs.force > CONTACT_FORCE
            and float(gs.proximity[0]) < PRESENCE_DIST)


def classify_grasped(gs: GripperState, library: dict[str, np.ndarray],
                     threshold: float = 0.25) -> str | None:
    """Nearest neighbor over the (width, proximity) feature vector.

    Returns the class label, or None (Unknown) beyond the distance threshold.
    Ties break deterministically toward the lexicographically lowest class.
    """
    if not library:
        raise ValueError("signature library is empty")
    feat = gs.feature_vector()
    best_cls: str | None = None
    best_d = np.inf
    for cls in sorted(library):
        d = float(np.linalg.norm(feat - np.asarray(library[cls])))
        if d < best_d - 1e-12:
            best_cls, best_d = cls, d
    return best_cls if best_d <= threshold else None
