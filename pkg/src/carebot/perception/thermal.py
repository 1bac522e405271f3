"""Thermal screening pipeline: frame handling, face point selection,
cohort calibration and the relative elevated-temperature decision."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TEMP_MIN, TEMP_MAX = 250.0, 320.0
EBT_K = 3.0                  # threshold multiplier on the cohort stddev
EBT_MARGIN = 0.3             # kelvin added to the threshold
STD_FLOOR = 0.1              # kelvin floor on the cohort stddev
MIN_BASELINE_N = 10
NOTIFY_CONFIDENCE = 0.5      # staff-notification cut on the confidence score


class RegionOutsideFrame(Exception):
    pass


class LandmarksOutsideFrame(Exception):
    pass


class TooFewSamples(Exception):
    pass


@dataclass
class ThermalFrame:
    width: int
    height: int
    temps: np.ndarray            # (height, width) kelvin, float32
    stamp: float = 0.0

    def __post_init__(self):
        self.temps = np.asarray(self.temps, dtype=np.float32)
        if self.temps.shape != (self.height, self.width):
            raise ValueError("temps shape does not match width/height")
        if float(self.temps.min()) < TEMP_MIN or float(self.temps.max()) > TEMP_MAX:
            raise ValueError(f"temps outside plausible band [{TEMP_MIN}, {TEMP_MAX}] K")

    def save(self, path: str | Path) -> None:
        """Flat little-endian float32, row-major, with a JSON sidecar."""
        path = Path(path)
        path.write_bytes(self.temps.astype("<f4").tobytes())
        sidecar = {"width": self.width, "height": self.height, "stamp": self.stamp}
        path.with_suffix(".json").write_text(json.dumps(sidecar) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ThermalFrame":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        raw = np.frombuffer(path.read_bytes(), dtype="<f4")
        temps = raw.reshape(meta["height"], meta["width"])
        return cls(width=meta["width"], height=meta["height"], temps=temps.copy(),
                   stamp=float(meta.get("stamp", 0.0)))


@dataclass
class FaceObservation:
    bbox: tuple[int, int, int, int]                 # x0, y0, x1, y1
    inner_eye_points: list[tuple[int, int]]         # two pixel coords
    forehead_region: tuple[int, int, int, int]
    glasses: bool
    person_id_hash: str = ""

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        for px, py in self.inner_eye_points:
            if not (x0 <= px <= x1 and y0 <= py <= y1):
                raise ValueError("inner-eye landmark outside face bbox")
        fx0, fy0, fx1, fy1 = self.forehead_region
        if not (x0 <= fx0 <= fx1 <= x1 and y0 <= fy0 <= fy1 <= y1):
            raise ValueError("forehead region outside face bbox")


@dataclass
class EBTBaseline:
    mean: float
    stddev: float
    n: int
    created_at: float = 0.0


@dataclass
class EbtDecision:
    elevated: bool
    confidence: float
    delta: float
    point_used: str

    @property
    def notify(self) -> bool:
        return self.elevated and self.confidence >= NOTIFY_CONFIDENCE


def map_color_to_thermal(region: tuple[int, int, int, int], H: np.ndarray,
                         frame: ThermalFrame) -> tuple[int, int, int, int]:
    """Map a color-image region into thermal coordinates through the pair's
    homography, clipped to the frame; fully-outside regions are an error."""
    H = np.asarray(H, dtype=float)
    if H.shape != (3, 3) or abs(np.linalg.det(H)) < 1e-12:
        raise ValueError("homography must be an invertible 3x3 matrix")
    x0, y0, x1, y1 = region
    corners = np.array([[x0, y0, 1.0], [x1, y0, 1.0], [x1, y1, 1.0], [x0, y1, 1.0]])
    mapped = (H @ corners.T).T
    mapped = mapped[:, :2] / mapped[:, 2:3]
    mx0, my0 = mapped.min(axis=0)
    mx1, my1 = mapped.max(axis=0)
    if mx1 < 0 or my1 < 0 or mx0 >= frame.width or my0 >= frame.height:
        raise RegionOutsideFrame(f"region maps to ({mx0:.0f},{my0:.0f})-({mx1:.0f},{my1:.0f})")
    cx0 = int(max(0, math.floor(mx0)))
    cy0 = int(max(0, math.floor(my0)))
    cx1 = int(min(frame.width - 1, math.ceil(mx1)))
    cy1 = int(min(frame.height - 1, math.ceil(my1)))
    return (cx0, cy0, cx1, cy1)


def map_point(p: tuple[int, int], H: np.ndarray) -> tuple[int, int]:
    v = np.asarray(H, dtype=float) @ np.array([p[0], p[1], 1.0])
    return (int(round(v[0] / v[2])), int(round(v[1] / v[2])))


def ebt_point(face: FaceObservation, frame: ThermalFrame) -> tuple[float, str]:
    """Temperature reading for one face, already mapped into the thermal frame.

    Without glasses: mean of the two inner-eye (tear gland) pixels. With
    glasses those points are occluded, so the forehead-region maximum is used
    instead. Returns (kelvin, which point was used).
    """
    if face.glasses:
        x0, y0, x1, y1 = face.forehead_region
        if x1 < 0 or y1 < 0 or x0 >= frame.width or y0 >= frame.height:
            raise LandmarksOutsideFrame("forehead region off-frame")
        x0, y0 = max(0, x0), max(0, y0)
        x1, y1 = min(frame.width - 1, x1), min(frame.height - 1, y1)
        patch = frame.temps[y0:y1 + 1, x0:x1 + 1]
        return float(patch.max()), "forehead_max"
    vals = []
    for px, py in face.inner_eye_points:
        if not (0 <= px < frame.width and 0 <= py < frame.height):
            raise LandmarksOutsideFrame(f"inner-eye point ({px},{py}) off-frame")
        vals.append(float(frame.temps[py, px]))
    return float(np.mean(vals)), "inner_eye"


def calibrate_baseline(samples: list[float], created_at: float = 0.0,
                       min_n: int = MIN_BASELINE_N) -> EBTBaseline:
    """Healthy-cohort statistics; the stddev floor keeps a degenerate cohort
    from producing a hair-trigger threshold."""
    if len(samples) < min_n:
        raise TooFewSamples(f"{len(samples)} samples, need at least {min_n}")
    arr = np.asarray(samples, dtype=float)
    std = float(arr.std(ddof=1))
    return EBTBaseline(mean=float(arr.mean()), stddev=max(STD_FLOOR, std),
                       n=len(samples), created_at=created_at)


def flag_ebt(measured: float, baseline: EBTBaseline, point_used: str,
             k: float = EBT_K, margin: float = EBT_MARGIN) -> EbtDecision:
    """Relative screening decision against the cohort baseline.

    Elevated iff the excess over the cohort mean clears k standard deviations
    plus the margin; confidence grows monotonically with the excess.
    """
    delta = measured - baseline.mean
    threshold = k * baseline.stddev + margin
    elevated = delta > threshold
    confidence = min(1.0, max(0.0, delta / (2.0 * k * baseline.stddev)))
    return EbtDecision(elevated=elevated, confidence=confidence, delta=delta,
                       point_used=point_used)


# -- synthetic frames (corpus generation and the simulated screening node) ----

AMBIENT_K = 295.0
FOREHEAD_OFFSET = 0.3        # forehead max reads this far below the tear gland


def make_synthetic_frame(person_temp_k: float, glasses: bool,
                         rng: np.random.Generator, stamp: float = 0.0,
                         width: int = 80, height: int = 60,
                         person_id_hash: str = "") -> tuple[ThermalFrame, FaceObservation]:
    """Deterministic synthetic face frame with known ground truth.

    The inner-eye pixels carry the person's core temperature; the forehead
    band sits FOREHEAD_OFFSET below it; glasses replace the eye region with
    ambient-temperature lens pixels.
    """
    temps = np.full((height, width), AMBIENT_K, dtype=np.float32)
    temps += rng.normal(0.0, 0.2, (height, width)).astype(np.float32)
    bbox = (20, 10, 60, 50)
    x0, y0, x1, y1 = bbox
    temps[y0:y1, x0:x1] = person_temp_k - 2.0 + rng.normal(0.0, 0.3, (y1 - y0, x1 - x0))
    forehead = (24, 12, 56, 22)
    fx0, fy0, fx1, fy1 = forehead
    fh = person_temp_k - FOREHEAD_OFFSET
    temps[fy0:fy1, fx0:fx1] = fh - np.abs(rng.normal(0.3, 0.2, (fy1 - fy0, fx1 - fx0)))
    temps[(fy0 + fy1) // 2, (fx0 + fx1) // 2] = fh      # exact forehead max point
    eyes = [(32, 28), (46, 28)]
    if glasses:
        temps[26:32, 26:54] = AMBIENT_K + 2.0           # lenses mask the tear glands
    else:
        for ex, ey in eyes:
            temps[ey, ex] = person_temp_k
    temps = np.clip(temps, TEMP_MIN, TEMP_MAX)
    frame = ThermalFrame(width=width, height=height, temps=temps, stamp=stamp)
    face = FaceObservation(bbox=bbox, inner_eye_points=eyes, forehead_region=forehead,
                           glasses=glasses, person_id_hash=person_id_hash)
    return frame, face
