from .markers import MarkerObservation, detect_markers
from .fusion import FusionFailed, GraspTarget, fuse_grasp_target, object_pointcloud, person_near
from .thermal import (
    EBTBaseline,
    EbtDecision,
    FaceObservation,
    LandmarksOutsideFrame,
    RegionOutsideFrame,
    ThermalFrame,
    TooFewSamples,
    calibrate_baseline,
    ebt_point,
    flag_ebt,
    make_synthetic_frame,
    map_color_to_thermal,
)

__all__ = [
    "EBTBaseline",
    "EbtDecision",
    "FaceObservation",
    "FusionFailed",
    "GraspTarget",
    "LandmarksOutsideFrame",
    "MarkerObservation",
    "RegionOutsideFrame",
    "ThermalFrame",
    "TooFewSamples",
    "calibrate_baseline",
    "detect_markers",
    "ebt_point",
    "flag_ebt",
    "fuse_grasp_target",
    "make_synthetic_frame",
    "map_color_to_thermal",
    "object_pointcloud",
    "person_near",
]
