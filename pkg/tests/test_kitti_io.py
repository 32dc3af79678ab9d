"""Disparity PNG codec, pose files, and calibration files."""

import numpy as np
import pytest

from egostereo import kitti_io
from egostereo.core import DisparityMap, make_motion


def _map_from(values, valid):
    return DisparityMap(np.asarray(values, float), np.asarray(valid, bool))


class TestDisparityPng:
    def test_known_scale(self, tmp_path):
        # 20.0 px stores as round(20 * 256) = 5120
        disp = _map_from([[20.0, 0.0], [1.5, 63.0]], [[1, 0], [1, 1]])
        path = tmp_path / "d.png"
        kitti_io.write_disparity_png(str(path), disp)
        import cv2

        raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        assert raw.dtype == np.uint16
        assert raw[0, 0] == 5120
        assert raw[0, 1] == 0  # invalid -> zero sentinel
        assert raw[1, 0] == 384
        assert raw[1, 1] == 16128

    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        raw = rng.integers(0, 5000, size=(20, 30))
        disp = DisparityMap(raw / 256.0, raw > 0)
        path = tmp_path / "d.png"
        kitti_io.write_disparity_png(str(path), disp)
        back = kitti_io.read_disparity_png(str(path))
        assert np.array_equal(back.valid, disp.valid)
        assert np.array_equal(back.values[back.valid], disp.values[disp.valid])

    def test_tiny_valid_disparity_survives(self, tmp_path):
        # 1/1000 px would round to raw 0 and silently become invalid;
        # the writer clamps valid pixels to raw 1 instead
        disp = _map_from([[0.001, 5.0]], [[1, 1]])

        path = tmp_path / "d.png"
        kitti_io.write_disparity_png(str(path), disp)
        back = kitti_io.read_disparity_png(str(path))
        assert back.valid.all()
        assert back.values[0, 0] == pytest.approx(1 / 256)

    def test_overflow_rejected(self, tmp_path):
        disp = _map_from([[256.0, 5.0]], [[1, 1]])
        with pytest.raises(ValueError):
            kitti_io.write_disparity_png(str(tmp_path / "d.png"), disp)

    def test_eight_bit_png_rejected(self, tmp_path):
        import cv2

        path = tmp_path / "gray.png"
        cv2.imwrite(str(path), np.zeros((4, 4), np.uint8))
        with pytest.raises(kitti_io.FileFormatError):
            kitti_io.read_disparity_png(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises((kitti_io.FileFormatError, OSError)):
            kitti_io.read_disparity_png(str(tmp_path / "absent.png"))


class TestPoseFile:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        poses = []
        for _ in range(5):
            # random small rotation via Rodrigues-free construction:
            # orthonormalize a perturbed identity
            a = np.eye(3) + 0.1 * rng.standard_normal((3, 3))
            q, _ = np.linalg.qr(a)
            if np.linalg.det(q) < 0:
                q[:, 0] = -q[:, 0]
            poses.append(make_motion(R=q, t=rng.standard_normal(3)))
        path = tmp_path / "poses.txt"
        kitti_io.write_pose_file(str(path), poses)
        back = kitti_io.read_pose_file(str(path))
        assert len(back) == 5
        for got, want in zip(back, poses):
            assert np.array_equal(got, want)  # %.17g preserves doubles

    def test_bad_rotation_reports_line(self, tmp_path):
        path = tmp_path / "poses.txt"
        rows = ["1 0 0 0 0 1 0 0 0 0 1 0", "2 0 0 0 0 1 0 0 0 0 1 0"]
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(kitti_io.FileFormatError, match=r":2: rotation"):
            kitti_io.read_pose_file(str(path))

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "poses.txt"
        path.write_text("1 0 0 0 0 1 0 0 0 0 1\n")
        with pytest.raises(kitti_io.FileFormatError):
            kitti_io.read_pose_file(str(path))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "poses.txt"
        path.write_text("")
        with pytest.raises(kitti_io.FileFormatError):
            kitti_io.read_pose_file(str(path))


class TestCalibFile:
    def test_round_trip(self, tmp_path):
        calib = kitti_io.CalibData(f=718.856, cx=607.1928, cy=185.2157, b=0.54)
        path = tmp_path / "calib.txt"
        kitti_io.write_calib_file(str(path), calib)
        back = kitti_io.read_calib_file(str(path))
        assert back.f == pytest.approx(calib.f)
        assert back.cx == pytest.approx(calib.cx)
        assert back.cy == pytest.approx(calib.cy)
        assert back.b == pytest.approx(calib.b)

    def test_missing_right_projection(self, tmp_path):
        path = tmp_path / "calib.txt"
        path.write_text("P0: 100 0 50 0 0 100 25 0 0 0 1 0\n")
        with pytest.raises(kitti_io.FileFormatError):
            kitti_io.read_calib_file(str(path))

    def test_inconsistent_focal_lengths(self, tmp_path):
        path = tmp_path / "calib.txt"
        path.write_text(
            "P0: 100 0 50 0 0 100 25 0 0 0 1 0\n"
            "P1: 120 0 50 -54 0 120 25 0 0 0 1 0\n"
        )
        with pytest.raises(kitti_io.FileFormatError):
            kitti_io.read_calib_file(str(path))

    def test_nonpositive_baseline(self, tmp_path):
        path = tmp_path / "calib.txt"
        path.write_text(
            "P0: 100 0 50 0 0 100 25 0 0 0 1 0\n"
            "P1: 100 0 50 54 0 100 25 0 0 0 1 0\n"
        )
        with pytest.raises(kitti_io.FileFormatError):
            kitti_io.read_calib_file(str(path))
