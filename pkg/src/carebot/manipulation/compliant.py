"""Compliant PD control mode with contact/collision detection, plus the
short calibration sweep executed at startup."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .arm import CONTROL_DT, ArmModel, JointState

COLLISION_TORQUE = 3.0       # N*m per joint
COLLISION_DEBOUNCE = 3       # consecutive 100 Hz samples over threshold
CAL_AMPLITUDE = math.radians(4.0)   # per-joint search sweep, under the 5 deg bound
CAL_DURATION = 2.5                  # seconds, under the 3 s bound
JOINT_INERTIA = 1.0


class CalibrationFailed(Exception):
    pass


@dataclass
class ComplianceGains:
    kp: np.ndarray = field(default_factory=lambda: np.full(6, 50.0))
    kd: np.ndarray = field(default_factory=lambda: np.full(6, 5.0))
    stiffness: float = 1.0
    feedforward: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        if np.any(self.kp < 0) or np.any(self.kd < 0) or self.stiffness < 0:
            raise ValueError("gains must be >= 0")


def compliant_step(state: JointState, q_ref: np.ndarray, gains: ComplianceGains,
                   external_load: np.ndarray | None = None,
                   dt: float = CONTROL_DT) -> tuple[JointState, bool]:
    """One 100 Hz step of the soft PD mode.

    Simulated torque is feedforward plus stiffness-scaled PD on the tracking
    error; the external torque estimate comes from the torque balance the
    controller observes. With all gains zero there is no tracking-based
    observation, so the estimate stays zero and collision is never flagged.
    Collision is latched after the debounce window of consecutive samples
    over the per-joint threshold.
    """
    q_ref = np.asarray(q_ref, dtype=float)
    load = np.zeros(6) if external_load is None else np.asarray(external_load, dtype=float)
    e = q_ref - state.q
    tau_pd = gains.stiffness * (gains.kp * e - gains.kd * state.qd)
    tau = tau_pd + gains.feedforward
    qdd = (tau - load) / JOINT_INERTIA
    qd_new = state.qd + qdd * dt
    q_new = state.q + qd_new * dt

    observing = bool(np.any(gains.kp > 0) or np.any(gains.kd > 0))
    est = (tau - JOINT_INERTIA * qdd) if observing else np.zeros(6)

    over = bool(np.any(np.abs(est) > COLLISION_TORQUE))
    streak = state.contact_streak + 1 if over else 0
    collision = observing and streak >= COLLISION_DEBOUNCE
    new_state = replace(state, q=q_new, qd=qd_new, external_torque_est=est,
                        contact_streak=streak)
    return new_state, collision


def calibrate(state: JointState, model: ArmModel | None = None,
              encoder_ok: bool = True) -> tuple[JointState, dict]:
    """Startup encoder-search sweep: every joint moves at most CAL_AMPLITUDE
    and the whole procedure takes CAL_DURATION seconds of sim time.

    Already-calibrated state is a no-op. Returns the calibrated state and a
    report with the realized per-joint excursions and duration.
    """
    if state.calibrated:
        return state, {"duration_s": 0.0, "max_excursion_rad": [0.0] * 6,
                       "already_calibrated": True}
    if not encoder_ok:
        raise CalibrationFailed("encoder oracle unavailable")
    q0 = state.q.copy()
    # sweep away from the nearer joint limit so clamping never occurs
    direction = np.ones(6)
    if model is not None:
        direction = np.where(model.joint_limits[:, 1] - q0 < CAL_AMPLITUDE, -1.0, 1.0)
    steps = int(CAL_DURATION / CONTROL_DT)
    max_exc = np.zeros(6)
    for k in range(steps + 1):
        t = k * CONTROL_DT
        dq = direction * CAL_AMPLITUDE * math.sin(2.0 * math.pi * t / CAL_DURATION)
        max_exc = np.maximum(max_exc, np.abs(dq))
    new_state = replace(state, q=q0, qd=np.zeros(6), calibrated=True)
    return new_state, {"duration_s": steps * CONTROL_DT,
                       "max_excursion_rad": max_exc.tolist(),
                       "already_calibrated": False}
