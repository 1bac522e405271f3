"""Constrained numerical inverse kinematics: damped least squares with
adaptive damping near singularities and joint-limit clamping."""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .arm import ArmModel, ToolPose, fk, jacobian, quat_to_matrix, rotation_error

POS_TOL = 1e-4
ROT_TOL = 1e-3
MAX_ITERS = 200
LAMBDA_MIN = 1e-3
LAMBDA_MAX = 1e-1
SIGMA_GOOD = 0.08           # smallest singular value above which damping stays minimal
MAX_RESTARTS = 4


class IkConstraint(str, Enum):
    FULL_POSE = "full_pose"
    POSITION_ONLY = "position_only"
    POSITION_PLUS_AXIS = "position_plus_axis"


class Unreachable(Exception):
    """Target lies beyond the arm's reach radius."""


class IKNoConverge(Exception):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"IK did not converge after {iterations} iterations "
                         f"(residual {residual:.2e})")


ROT_WEIGHT = 0.5             # balances meter-scale vs radian-scale rows in the solve


def _task_error(model: ArmModel, q: np.ndarray, target: ToolPose,
                constraint: IkConstraint) -> tuple[np.ndarray, np.ndarray]:
    """Error vector and matching Jacobian rows for the chosen constraint.

    Rotation-like rows are weighted by ROT_WEIGHT inside the solve; residual
    checks divide the weight back out.
    """
    cur = fk(model, q)
    J = jacobian(model, q)
    p_err = target.position - cur.position
    if constraint == IkConstraint.POSITION_ONLY:
        return p_err, J[:3]
    Jw = J.copy()
    Jw[3:] *= ROT_WEIGHT
    if constraint == IkConstraint.POSITION_PLUS_AXIS:
        a_cur = quat_to_matrix(cur.orientation)[:, 2]
        a_tgt = quat_to_matrix(target.orientation)[:, 2]
        axis_err = np.cross(a_cur, a_tgt)
        return np.concatenate([p_err, ROT_WEIGHT * axis_err]), Jw
    rot_err = rotation_error(target.orientation, cur.orientation)
    return np.concatenate([p_err, ROT_WEIGHT * rot_err]), Jw


def _residuals(err: np.ndarray, constraint: IkConstraint) -> tuple[float, float]:
    pos = float(np.linalg.norm(err[:3]))
    rot = float(np.linalg.norm(err[3:])) / ROT_WEIGHT if len(err) > 3 else 0.0
    return pos, rot


def _converged(pos: float, rot: float) -> bool:
    return pos < POS_TOL and rot < ROT_TOL


def _solve_from(model: ArmModel, target: ToolPose, q0: np.ndarray,
                constraint: IkConstraint) -> tuple[np.ndarray | None, float, np.ndarray]:
    q = model.clamp(np.asarray(q0, dtype=float).copy())
    err, J = _task_error(model, q, target, constraint)
    best = math.inf
    stall = 0
    for _ in range(MAX_ITERS):
        pos, rot = _residuals(err, constraint)
        if _converged(pos, rot):
            return q, pos + rot, q
        if pos + rot < best - 1e-12:
            best = pos + rot
            stall = 0
        else:
            stall += 1
            if stall > 25:
                break                      # stuck; caller restarts from a new seed
        sigma_min = np.linalg.svd(J, compute_uv=False)[-1]
        if sigma_min >= SIGMA_GOOD:
            lam = LAMBDA_MIN
        else:
            lam = LAMBDA_MIN + (LAMBDA_MAX - LAMBDA_MIN) * (1.0 - sigma_min / SIGMA_GOOD)
        # near convergence heavy damping only slows the tail: shrink with error
        lam = max(LAMBDA_MIN, lam * min(1.0, 10.0 * float(np.linalg.norm(err))))
        JT = J.T
        dq = JT @ np.linalg.solve(J @ JT + lam ** 2 * np.eye(J.shape[0]), err)
        step = np.linalg.norm(dq)
        if step > 0.5:
            dq *= 0.5 / step
        # backtracking keeps the iteration monotone near limits and singularities
        cur_norm = float(np.linalg.norm(err))
        alpha = 1.0
        for _bt in range(5):
            q_new = model.clamp(q + alpha * dq)
            err_new, J_new = _task_error(model, q_new, target, constraint)
            if float(np.linalg.norm(err_new)) < cur_norm or _bt == 4:
                q, err, J = q_new, err_new, J_new
                break
            alpha *= 0.5
    pos, rot = _residuals(err, constraint)
    if _converged(pos, rot):
        return q, pos + rot, q
    return None, min(best, pos + rot), q


def ik(model: ArmModel, target: ToolPose, seed: np.ndarray,
       constraint: IkConstraint | str = IkConstraint.FULL_POSE) -> np.ndarray:
    """Solve for joint angles reaching the target under the given constraint.

    Iterates damped least squares from the seed; on a stuck solve (joint
    limits, local minimum) retries from deterministically perturbed seeds.
    Raises Unreachable for targets beyond the reach sphere and IKNoConverge
    when every restart fails.
    """
    constraint = IkConstraint(constraint)
    seed = np.asarray(seed, dtype=float)
    if not model.within_limits(seed):
        raise ValueError("seed outside joint limits")
    radial = float(np.linalg.norm(np.asarray(target.position) - model.shoulder))
    if radial > model.reach_radius + 1e-9:
        raise Unreachable(f"target {radial:.3f} m from shoulder exceeds reach "
                          f"{model.reach_radius:.3f} m")

    rng = np.random.default_rng(12345)     # fixed: restarts are deterministic
    best_res = math.inf
    iters_budget = 0
    q_try = seed
    for attempt in range(MAX_RESTARTS + 1):
        q_star, res, q_last = _solve_from(model, target, q_try, constraint)
        iters_budget += MAX_ITERS
        if q_star is not None:
            return q_star
        best_res = min(best_res, res)
        q_try = _best_of_k_seed(model, target, constraint, rng, k=64)
    raise IKNoConverge(iters_budget, best_res)


def _best_of_k_seed(model: ArmModel, target: ToolPose, constraint: IkConstraint,
                    rng: np.random.Generator, k: int) -> np.ndarray:
    """Coarse global restart: sample k configurations, keep the best-fitting one."""
    best_q = None
    best_norm = math.inf
    for _ in range(k):
        q = rng.uniform(model.joint_limits[:, 0], model.joint_limits[:, 1])
        err, _ = _task_error(model, q, target, constraint)
        n = float(np.linalg.norm(err))
        if n < best_norm:
            best_norm, best_q = n, q
    return best_q
