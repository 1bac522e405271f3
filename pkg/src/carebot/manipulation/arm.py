"""6-DoF arm model: DH kinematics, forward kinematics and geometric Jacobian.

The model of record is a collaborative-arm-like chain with about 0.9 m of
radial reach; the home configuration (all zeros) is the upright transport
pose with the elbow folded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CONTROL_DT = 0.01            # 100 Hz control cycle

# Default DH table rows: (a m, alpha rad, d m, theta_offset rad)
_DEFAULT_DH = np.array([
    [0.00,  math.pi / 2, 0.300,  0.0],
    [0.40,  0.0,         0.000,  math.pi / 2],
    [0.00,  math.pi / 2, 0.000, -math.pi / 2],
    [0.00, -math.pi / 2, 0.400,  0.0],
    [0.00,  math.pi / 2, 0.000,  0.0],
    [0.00,  0.0,         0.126,  0.0],
])

_DEFAULT_LIMITS = np.deg2rad(np.array([
    [-170.0, 170.0],
    [-120.0, 120.0],
    [-150.0, 150.0],
    [-170.0, 170.0],
    [-120.0, 120.0],
    [-170.0, 170.0],
]))


@dataclass
class ArmModel:
    dh: np.ndarray = field(default_factory=lambda: _DEFAULT_DH.copy())
    joint_limits: np.ndarray = field(default_factory=lambda: _DEFAULT_LIMITS.copy())
    vel_limits: np.ndarray = field(default_factory=lambda: np.full(6, 1.5))
    acc_limits: np.ndarray = field(default_factory=lambda: np.full(6, 3.0))
    torque_limits: np.ndarray = field(default_factory=lambda: np.full(6, 50.0))
    payload_kg: tuple[float, float] = (3.0, 5.0)    # metadata only

    def __post_init__(self):
        if self.dh.shape != (6, 4):
            raise ValueError("dh table must be 6x4")
        if not np.all(self.joint_limits[:, 0] < self.joint_limits[:, 1]):
            raise ValueError("joint limits must satisfy min < max")

    @property
    def shoulder(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.dh[0, 2]])

    @property
    def reach_radius(self) -> float:
        """Radial reach from the shoulder: link lengths past joint 1."""
        return float(np.abs(self.dh[1:, 0]).sum() + np.abs(self.dh[1:, 2]).sum())

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.joint_limits[:, 0], self.joint_limits[:, 1])

    def within_limits(self, q: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.all(q >= self.joint_limits[:, 0] - tol) and
                    np.all(q <= self.joint_limits[:, 1] + tol))

    def random_q(self, rng: np.random.Generator, margin: float = 0.05) -> np.ndarray:
        lo = self.joint_limits[:, 0] * (1 - margin)
        hi = self.joint_limits[:, 1] * (1 - margin)
        return rng.uniform(lo, hi)


@dataclass
class JointState:
    q: np.ndarray = field(default_factory=lambda: np.zeros(6))
    qd: np.ndarray = field(default_factory=lambda: np.zeros(6))
    external_torque_est: np.ndarray = field(default_factory=lambda: np.zeros(6))
    calibrated: bool = False
    contact_streak: int = 0


@dataclass
class ToolPose:
    position: np.ndarray                  # (3,)
    orientation: np.ndarray               # unit quaternion (w, x, y, z)

    def __post_init__(self):
        n = float(np.linalg.norm(self.orientation))
        if abs(n - 1.0) > 1e-9:
            if n < 1e-12:
                raise ValueError("zero quaternion")
            self.orientation = self.orientation / n


def quat_from_matrix(R: np.ndarray) -> np.ndarray:
    """Quaternion (w, x, y, z) via Shepperd's method; robust for w near 0."""
    t = np.trace(R)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2
        return np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s,
                         (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    i = int(np.argmax(np.diag(R)))
    if i == 0:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2
        return np.array([(R[2, 1] - R[1, 2]) / s, 0.25 * s,
                         (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s])
    if i == 1:
        s = math.sqrt(1.0 - R[0, 0] + R[1, 1] - R[2, 2]) * 2
        return np.array([(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s,
                         0.25 * s, (R[1, 2] + R[2, 1]) / s])
    s = math.sqrt(1.0 - R[0, 0] - R[1, 1] + R[2, 2]) * 2
    return np.array([(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s,
                     (R[1, 2] + R[2, 1]) / s, 0.25 * s])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rotation_error(q_target: np.ndarray, q_current: np.ndarray) -> np.ndarray:
    """Rotation vector taking current orientation onto the target."""
    R_err = quat_to_matrix(q_target) @ quat_to_matrix(q_current).T
    cos_a = (np.trace(R_err) - 1.0) / 2.0
    cos_a = min(1.0, max(-1.0, cos_a))
    angle = math.acos(cos_a)
    if angle < 1e-12:
        return np.zeros(3)
    axis = np.array([R_err[2, 1] - R_err[1, 2],
                     R_err[0, 2] - R_err[2, 0],
                     R_err[1, 0] - R_err[0, 1]])
    n = np.linalg.norm(axis)
    if n < 1e-12:
        # angle ~ pi: extract axis from the symmetric part
        evals, evecs = np.linalg.eigh(R_err)
        axis = evecs[:, int(np.argmax(evals))]
        return axis / np.linalg.norm(axis) * angle
    return axis / n * angle


def _dh_transform(theta: float, d: float, a: float, alpha: float) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def fk_frames(model: ArmModel, q: np.ndarray) -> list[np.ndarray]:
    """Per-joint cumulative transforms T_0..T_6 (T_0 = identity)."""
    frames = [np.eye(4)]
    T = np.eye(4)
    for i in range(6):
        a, alpha, d, off = model.dh[i]
        T = T @ _dh_transform(float(q[i]) + off, d, a, alpha)
        frames.append(T)
    return frames


def fk(model: ArmModel, q: np.ndarray) -> ToolPose:
    T = fk_frames(model, q)[-1]
    return ToolPose(position=T[:3, 3].copy(), orientation=quat_from_matrix(T[:3, :3]))


def jacobian(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """Geometric Jacobian: rows are tool linear then angular velocity."""
    frames = fk_frames(model, q)
    p_e = frames[-1][:3, 3]
    J = np.zeros((6, 6))
    for i in range(6):
        z = frames[i][:3, 2]
        p = frames[i][:3, 3]
        J[:3, i] = np.cross(z, p_e - p)
        J[3:, i] = z
    return J
