"""Joint- and tool-space trajectory planning on the 100 Hz control grid.

Joint space uses synchronized trapezoidal velocity profiles; tool space
interpolates the pose along a straight line and solves IK per sample seeded
by the previous one, raising damping instead of aborting near singularities.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .arm import CONTROL_DT, ArmModel, ToolPose, fk, quat_from_matrix, quat_to_matrix
from .ik import IkConstraint, IKNoConverge, Unreachable, ik

TOOL_SPEED = 0.25            # m/s nominal straight-line tool speed
MAX_RETIME = 6


class TrajInfeasible(Exception):
    pass


@dataclass
class Trajectory:
    times: np.ndarray            # (N,), spaced exactly CONTROL_DT apart
    positions: np.ndarray        # (N, 6)
    velocities: np.ndarray       # (N, 6)
    space: str                   # "joint" | "tool"

    def __len__(self) -> int:
        return len(self.times)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0]) if len(self.times) else 0.0

    def to_jsonl(self) -> str:
        lines = []
        for t, q, qd in zip(self.times, self.positions, self.velocities):
            lines.append(json.dumps({"t": round(float(t), 6),
                                     "q": [round(float(v), 9) for v in q],
                                     "qd": [round(float(v), 9) for v in qd]}))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str, space: str = "joint") -> "Trajectory":
        ts, qs, qds = [], [], []
        for line in text.splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            ts.append(row["t"])
            qs.append(row["q"])
            qds.append(row["qd"])
        return cls(times=np.array(ts), positions=np.array(qs),
                   velocities=np.array(qds), space=space)


def trapezoid_duration(dist: float, vmax: float, amax: float) -> float:
    """Closed-form minimal duration of a rest-to-rest trapezoidal profile."""
    if dist <= 0:
        return 0.0
    if dist >= vmax * vmax / amax:
        return dist / vmax + vmax / amax
    return 2.0 * math.sqrt(dist / amax)


def _trapezoid_at(t: float, dist: float, v_peak: float, amax: float) -> tuple[float, float]:
    """Position and velocity along a trapezoid of total travel `dist`."""
    if dist <= 0:
        return 0.0, 0.0
    t_acc = v_peak / amax
    d_acc = 0.5 * amax * t_acc ** 2
    d_cruise = dist - 2 * d_acc
    t_cruise = max(0.0, d_cruise / v_peak)
    if t <= t_acc:
        return 0.5 * amax * t * t, amax * t
    if t <= t_acc + t_cruise:
        return d_acc + v_peak * (t - t_acc), v_peak
    td = t - t_acc - t_cruise
    td = min(td, t_acc)
    return d_acc + d_cruise + v_peak * td - 0.5 * amax * td * td, max(0.0, v_peak - amax * td)


def _peak_velocity_for(dist: float, T: float, amax: float, vmax: float) -> float:
    """Peak velocity so a trapezoid with accel amax covers dist in exactly T."""
    if dist <= 0 or T <= 0:
        return 0.0
    disc = amax * amax * T * T - 4.0 * amax * dist
    if disc < 0:
        # T slightly under the triangular minimum from grid rounding
        return min(vmax, amax * T / 2.0)
    v = (amax * T - math.sqrt(disc)) / 2.0
    return min(vmax, v)


def plan_joint_trajectory(model: ArmModel, q0: np.ndarray, q1: np.ndarray) -> Trajectory:
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    if not (model.within_limits(q0) and model.within_limits(q1)):
        raise TrajInfeasible("endpoint outside joint limits")
    dist = np.abs(q1 - q0)
    if float(dist.max()) < 1e-12:
        return Trajectory(times=np.array([0.0]), positions=q0[None, :].copy(),
                          velocities=np.zeros((1, 6)), space="joint")
    durations = [trapezoid_duration(float(d), float(v), float(a))
                 for d, v, a in zip(dist, model.vel_limits, model.acc_limits)]
    T = max(durations)
    n = int(math.ceil(T / CONTROL_DT - 1e-9))
    T = n * CONTROL_DT
    peaks = [_peak_velocity_for(float(dist[j]), T, float(model.acc_limits[j]),
                                float(model.vel_limits[j])) for j in range(6)]
    sign = np.sign(q1 - q0)
    times = np.arange(n + 1) * CONTROL_DT
    pos = np.empty((n + 1, 6))
    vel = np.empty((n + 1, 6))
    for k, t in enumerate(times):
        for j in range(6):
            s, v = _trapezoid_at(float(t), float(dist[j]), peaks[j],
                                 float(model.acc_limits[j]))
            pos[k, j] = q0[j] + sign[j] * s
            vel[k, j] = sign[j] * v
    pos[-1] = q1
    vel[-1] = 0.0
    return Trajectory(times=times, positions=pos, velocities=vel, space="joint")


def plan_tool_trajectory(model: ArmModel, q0: np.ndarray, goal: ToolPose) -> Trajectory:
    q0 = np.asarray(q0, dtype=float)
    start = fk(model, q0)
    dist = float(np.linalg.norm(goal.position - start.position))
    q_a = start.orientation
    q_b = goal.orientation
    if float(np.dot(q_a, q_b)) < 0:
        q_b = -q_b

    duration = max(2 * CONTROL_DT, dist / TOOL_SPEED)
    for _ in range(MAX_RETIME):
        n = int(math.ceil(duration / CONTROL_DT - 1e-9))
        times = np.arange(n + 1) * CONTROL_DT
        pos = np.empty((n + 1, 6))
        q_prev = q0.copy()
        try:
            for k in range(n + 1):
                s = k / n
                p = start.position + s * (goal.position - start.position)
                quat = _slerp(q_a, q_b, s)
                q_prev = ik(model, ToolPose(position=p, orientation=quat), q_prev,
                            IkConstraint.FULL_POSE)
                pos[k] = q_prev
        except (IKNoConverge, Unreachable) as e:
            raise TrajInfeasible(f"IK failed mid-path: {e}") from e
        vel = np.gradient(pos, CONTROL_DT, axis=0)
        acc = np.gradient(vel, CONTROL_DT, axis=0)
        if (np.abs(vel) <= model.vel_limits[None, :] + 1e-9).all() and \
           (np.abs(acc) <= model.acc_limits[None, :] + 1e-9).all():
            vel[0] = vel[-1] = 0.0
            return Trajectory(times=times, positions=pos, velocities=vel, space="tool")
        duration *= 1.6
    raise TrajInfeasible("could not satisfy joint velocity/acceleration limits")


def _slerp(qa: np.ndarray, qb: np.ndarray, s: float) -> np.ndarray:
    dot = float(np.dot(qa, qb))
    dot = min(1.0, max(-1.0, dot))
    omega = math.acos(dot)
    if omega < 1e-9:
        out = (1 - s) * qa + s * qb
        return out / np.linalg.norm(out)
    return (math.sin((1 - s) * omega) * qa + math.sin(s * omega) * qb) / math.sin(omega)


def plan_trajectory(model: ArmModel, q0: np.ndarray,
                    goal: np.ndarray | ToolPose, space: str = "joint") -> Trajectory:
    """Plan a limit-respecting trajectory sampled on the 100 Hz grid."""
    if space == "joint":
        if isinstance(goal, ToolPose):
            goal = ik(model, goal, q0)
        return plan_joint_trajectory(model, q0, goal)
    if space == "tool":
        if not isinstance(goal, ToolPose):
            goal = fk(model, np.asarray(goal, dtype=float))
        return plan_tool_trajectory(model, q0, goal)
    raise ValueError(f"unknown space {space!r}")
