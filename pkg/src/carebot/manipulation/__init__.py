from .arm import ArmModel, JointState, ToolPose, fk, fk_frames, jacobian
from .ik import IkConstraint, IKNoConverge, Unreachable, ik
from .trajectory import Trajectory, TrajInfeasible, plan_trajectory
from .compliant import CalibrationFailed, ComplianceGains, calibrate, compliant_step
from .gripper import (
    GripperState,
    WidthOutOfRange,
    classify_grasped,
    grip_to,
    verify_grasp,
)

__all__ = [
    "ArmModel",
    "CalibrationFailed",
    "ComplianceGains",
    "GripperState",
    "IKNoConverge",
    "IkConstraint",
    "JointState",
    "ToolPose",
    "TrajInfeasible",
    "Trajectory",
    "Unreachable",
    "WidthOutOfRange",
    "calibrate",
    "classify_grasped",
    "compliant_step",
    "fk",
    "fk_frames",
    "grip_to",
    "ik",
    "jacobian",
    "plan_trajectory",
    "verify_grasp",
]
