import math

import numpy as np
import pytest

from carebot.geometry import Pose2D
from carebot.perception import (
    EBTBaseline,
    FaceObservation,
    FusionFailed,
    LandmarksOutsideFrame,
    RegionOutsideFrame,
    ThermalFrame,
    TooFewSamples,
    calibrate_baseline,
    detect_markers,
    ebt_point,
    flag_ebt,
    fuse_grasp_target,
    make_synthetic_frame,
    map_color_to_thermal,
    object_pointcloud,
    person_near,
)
from carebot.simworld import Marker, Person, SimObject
import helpers


def world_with(markers=(), people=(), objects=()):
    w = helpers.toy_facility_world()
    w.markers.extend(markers)
    w.people.extend(people)
    w.objects.extend(objects)
    return w


class TestMarkers:
    def test_marker_ahead_zero_noise_exact(self):
        w = world_with(markers=[Marker(7, Pose2D(3.0, 2.0, math.pi))])
        obs = detect_markers(w)
        assert len(obs) == 1
        assert obs[0].marker_id == 7
        assert obs[0].pose_cam[0] == pytest.approx(1.0, abs=1e-9)
        assert obs[0].pose_cam[1] == pytest.approx(0.0, abs=1e-9)

    def test_marker_behind_not_reported(self):
        w = world_with(markers=[Marker(7, Pose2D(0.7, 2.0, 0.0))])
        assert detect_markers(w) == []

    def test_completeness_and_soundness_vs_ground_truth(self):
        w = world_with(markers=[Marker(1, Pose2D(3.0, 2.0, 0.0)),      # ahead
                                Marker(2, Pose2D(2.5, 2.3, 0.0)),      # ahead, close
                                Marker(3, Pose2D(0.5, 2.0, 0.0)),      # behind
                                Marker(4, Pose2D(12.0, 2.0, 0.0))])    # out of range
        seen = {o.marker_id for o in detect_markers(w)}
        assert seen == {1, 2}

    def test_noise_statistics(self):
        w = world_with(markers=[Marker(7, Pose2D(3.0, 2.0, 0.0))])
        rng = np.random.default_rng(42)
        sigma = 0.005
        xs = [detect_markers(w, noise_sigma=sigma, rng=rng)[0].pose_cam[0]
              for _ in range(1000)]
        emp = float(np.std(xs))
        assert abs(emp - sigma) / sigma < 0.2


class TestFusion:
    def test_target_within_cm_of_ground_truth(self):
        obj = SimObject(name="b1", cls="bottle", pose=Pose2D(3.2, 2.1, 0.0), width_mm=60)
        w = world_with(objects=[obj])
        rng = np.random.default_rng(0)
        pts = object_pointcloud(w, "b1", n=100, rng=rng)
        target = fuse_grasp_target("bottle", pts, w.robot.pose)
        assert math.hypot(target.point[0] - 3.2, target.point[1] - 2.1) < 0.01
        assert np.allclose(target.approach, [0, 0, -1])

    def test_empty_points_fusion_failed(self):
        with pytest.raises(FusionFailed):
            fuse_grasp_target("bottle", np.zeros((0, 3)), Pose2D())

    def test_platform_shift_shifts_target_exactly(self):
        pts = np.array([[1.0, 0.2, 0.1], [1.1, 0.25, 0.12], [0.95, 0.18, 0.11]])
        t1 = fuse_grasp_target("cup", pts, Pose2D(2.0, 3.0, 0.0))
        t2 = fuse_grasp_target("cup", pts, Pose2D(3.0, 3.0, 0.0))
        assert t2.point[0] - t1.point[0] == pytest.approx(1.0, abs=1e-12)
        assert t2.point[1] == pytest.approx(t1.point[1], abs=1e-12)


class TestPersonNear:
    def test_person_inside_radius(self):
        w = world_with(people=[Person("p", Pose2D(2.5, 2.0, 0.0))])
        assert person_near(w, 1.5)

    def test_empty_facility(self):
        w = world_with()
        assert not person_near(w, 1.5)

    def test_boundary_is_closed(self):
        w = world_with(people=[Person("p", Pose2D(3.5, 2.0, 0.0))])
        assert person_near(w, 1.5)          # exactly at radius counts


class TestThermalMapping:
    FRAME = ThermalFrame(width=80, height=60, temps=np.full((60, 80), 300.0))

    def test_identity_homography(self):
        region = (10, 10, 20, 20)
        assert map_color_to_thermal(region, np.eye(3), self.FRAME) == region

    def test_pure_translation(self):
        H = np.eye(3)
        H[0, 2] = 5.0
        H[1, 2] = -3.0
        assert map_color_to_thermal((10, 10, 20, 20), H, self.FRAME) == (15, 7, 25, 17)

    def test_fully_outside_raises(self):
        H = np.eye(3)
        H[0, 2] = 500.0
        with pytest.raises(RegionOutsideFrame):
            map_color_to_thermal((10, 10, 20, 20), H, self.FRAME)


class TestEbtPoint:
    def test_inner_eye_mean_without_glasses(self):
        rng = np.random.default_rng(1)
        frame, face = make_synthetic_frame(309.1, glasses=False, rng=rng)
        temp, used = ebt_point(face, frame)
        assert used == "inner_eye"
        assert temp == pytest.approx(309.1, abs=1e-3)

    def test_forehead_max_with_glasses(self):
        rng = np.random.default_rng(2)
        frame, face = make_synthetic_frame(308.7, glasses=True, rng=rng)
        temp, used = ebt_point(face, frame)
        assert used == "forehead_max"
        assert temp == pytest.approx(308.7 - 0.3, abs=1e-3)

    def test_point_selection_is_pure_function_of_glasses(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            t = float(rng.uniform(306.0, 312.0))
            glasses = bool(rng.random() < 0.5)
            frame, face = make_synthetic_frame(t, glasses=glasses, rng=rng)
            _, used = ebt_point(face, frame)
            assert used == ("forehead_max" if glasses else "inner_eye")

    def test_landmarks_off_frame(self):
        frame = ThermalFrame(width=40, height=30, temps=np.full((30, 40), 300.0))
        face = FaceObservation(bbox=(30, 10, 60, 40), inner_eye_points=[(50, 20), (55, 20)],
                               forehead_region=(32, 12, 58, 18), glasses=False)
        with pytest.raises(LandmarksOutsideFrame):
            ebt_point(face, frame)


class TestBaseline:
    def test_degenerate_cohort_gets_floor(self):
        b = calibrate_baseline([309.0] * 12)
        assert b.mean == pytest.approx(309.0)
        assert b.stddev == pytest.approx(0.1)

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            calibrate_baseline([309.0] * 9)

    def test_matches_direct_computation(self):
        rng = np.random.default_rng(4)
        samples = list(rng.normal(309.0, 0.4, 20))
        b = calibrate_baseline(samples)
        assert b.mean == pytest.approx(float(np.mean(samples)), abs=1e-12)
        assert b.stddev == pytest.approx(float(np.std(samples, ddof=1)), abs=1e-12)
        assert b.n == 20


class TestFlagEbt:
    BASE = EBTBaseline(mean=309.0, stddev=0.3, n=20)

    def test_at_mean_normal(self):
        d = flag_ebt(309.0, self.BASE, "inner_eye")
        assert not d.elevated and not d.notify

    def test_plus_1_5_k_elevated_high_confidence(self):
        d = flag_ebt(310.5, self.BASE, "inner_eye")
        # threshold = 3 * 0.3 + 0.3 = 1.2 K; delta 1.5 K clears it
        assert d.elevated
        assert d.confidence == pytest.approx(1.5 / 1.8)
        assert d.notify

    def test_monotone_in_measured(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            m1 = float(rng.uniform(308.0, 312.0))
            m2 = m1 + float(rng.uniform(0.0, 2.0))
            d1 = flag_ebt(m1, self.BASE, "inner_eye")
            d2 = flag_ebt(m2, self.BASE, "inner_eye")
            if d1.elevated:
                assert d2.elevated
            assert d2.confidence >= d1.confidence

    def test_false_positive_rate_under_5_percent(self):
        rng = np.random.default_rng(6)
        normals = rng.normal(self.BASE.mean, self.BASE.stddev, 1000)
        fp = sum(flag_ebt(float(m), self.BASE, "inner_eye").elevated for m in normals)
        assert fp / 1000.0 < 0.05


class TestThermalFileFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        frame, _ = make_synthetic_frame(309.0, glasses=False, rng=rng, stamp=12.5)
        p = tmp_path / "frame_000.bin"
        frame.save(p)
        back = ThermalFrame.load(p)
        assert back.width == frame.width and back.height == frame.height
        assert back.stamp == 12.5
        assert np.array_equal(back.temps, frame.temps)

    def test_binary_is_le_float32_row_major(self, tmp_path):
        temps = np.arange(12, dtype=np.float32).reshape(3, 4) + 280.0
        frame = ThermalFrame(width=4, height=3, temps=temps)
        p = tmp_path / "f.bin"
        frame.save(p)
        raw = np.frombuffer(p.read_bytes(), dtype="<f4")
        assert np.array_equal(raw, temps.ravel())
