"""Disparity-space homography against hand values and the Euclidean oracle."""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from egostereo.core import StereoRig, make_motion
from egostereo.geometry import (
    BehindCameraError,
    PointAtInfinityError,
    disparity_homography,
    euclidean_warp_oracle,
    gamma,
    gamma_inv,
    right_motion,
    warp_pixels,
    warp_point,
)

from helpers import make_rig

# KITTI-flavored rig used for hand-computed values below
KITTI_RIG = StereoRig(
    f=718.856, b=0.54, cx=607.1928, cy=185.2157,
    width=1241, height=376, d_max=192,
)


def test_gamma_inverse_is_closed_form():
    for rig in (KITTI_RIG, make_rig()):
        prod = gamma(rig) @ gamma_inv(rig)
        assert np.allclose(prod, np.eye(4), atol=1e-12)


def test_depth_disparity_relation():
    # d = f*b/Z: 718.856 * 0.54 / 10 = 38.8182240 exactly
    d = KITTI_RIG.fb / 10.0
    assert abs(d - 38.818224) < 1e-9


def test_identity_motion_gives_identity_homography():
    # must be exact so that identity prediction is a true fixed point
    H = disparity_homography(KITTI_RIG, np.eye(4))
    assert np.array_equal(H, np.eye(4))


def test_translation_by_baseline_shifts_x_by_disparity():
    # moving the camera +b along x re-images every point at (x - d, y, d)
    rig = KITTI_RIG
    T = make_motion(t=(-rig.b, 0.0, 0.0))
    H = disparity_homography(rig, T)
    pts = np.array([
        [100.0, 50.0, 20.0],
        [-300.5, -120.0, 5.25],
        [0.0, 0.0, 1.0],
    ])
    out = warp_point(H, pts)
    want = pts + np.array([[-1.0, 0.0, 0.0]]) * pts[:, 2:3]
    assert np.allclose(out, want, atol=1e-9)


def test_forward_dolly_scales_disparity():
    # advancing by tz turns depth Z into Z - tz: d' = fb / (Z - tz)
    rig = make_rig()
    tz = 0.5
    T = make_motion(t=(0.0, 0.0, -tz))
    H = disparity_homography(rig, T)
    Z = 4.0
    d = rig.fb / Z
    out = warp_point(H, np.array([0.0, 0.0, d]))
    assert abs(out[2] - rig.fb / (Z - tz)) < 1e-9


def test_pure_yaw_changes_disparity_by_cosine():
    # for the on-axis point, yaw by theta moves depth Z to Z*cos(theta),
    # so d' = d / cos(theta): a ~1.5e-4 relative change at 1 degree, well
    # above warp precision -- rotation does not preserve disparity.
    rig = KITTI_RIG
    theta = np.deg2rad(1.0)
    rot = Rotation.from_euler("y", theta).as_matrix()
    T = make_motion(rot)
    H = disparity_homography(rig, T)
    d = 30.0
    out = warp_point(H, np.array([0.0, 0.0, d]))
    want = d / np.cos(theta)
    assert abs(out[2] - want) < 1e-9
    assert abs(out[2] - d) > 1e-4 * d  # visibly different from the input


def test_homography_composes_like_motion():
    rig = make_rig()
    rng = np.random.default_rng(3)
    for _ in range(20):
        r1 = Rotation.from_rotvec(rng.normal(0, 0.05, 3)).as_matrix()
        r2 = Rotation.from_rotvec(rng.normal(0, 0.05, 3)).as_matrix()
        T1 = make_motion(r1, rng.normal(0, 0.3, 3))
        T2 = make_motion(r2, rng.normal(0, 0.3, 3))
        H12 = disparity_homography(rig, T2 @ T1)
        H2H1 = disparity_homography(rig, T2) @ disparity_homography(rig, T1)
        pt = np.array([rng.uniform(-100, 100), rng.uniform(-60, 60), rng.uniform(2, 40)])
        assert np.allclose(warp_point(H12, pt), warp_point(H2H1, pt), atol=1e-9)


def test_warp_matches_euclidean_oracle():
    rng = np.random.default_rng(11)
    rig = make_rig()
    for _ in range(200):
        rot = Rotation.from_rotvec(rng.normal(0, 0.02, 3)).as_matrix()
        T = make_motion(rot, rng.normal(0, 0.2, 3))
        H = disparity_homography(rig, T)
        Z = rng.uniform(2.0, 40.0)
        pt = np.array([rng.uniform(-120, 120), rng.uniform(-60, 60), rig.fb / Z])
        got = warp_point(H, pt)
        want = euclidean_warp_oracle(rig, T, pt)
        assert np.allclose(got, want, rtol=1e-9, atol=1e-9)


def test_right_motion_identity_is_exact():
    rig = make_rig()
    assert np.array_equal(right_motion(rig, np.eye(4)), np.eye(4))


def test_right_motion_conjugation():
    # a pure rotation about the left camera center is, seen from the right
    # camera, a rotation plus an induced translation
    rig = make_rig()
    rot = Rotation.from_euler("y", 0.02).as_matrix()
    T = make_motion(rot)
    TR = right_motion(rig, T)
    assert np.allclose(TR[:3, :3], rot, atol=1e-12)
    assert not np.allclose(TR[:3, 3], 0.0, atol=1e-9)
    # conjugation preserves rigidity
    rtr = TR[:3, :3].T @ TR[:3, :3]
    assert np.allclose(rtr, np.eye(3), atol=1e-12)


def test_warp_point_rejects_point_at_infinity():
    rig = make_rig()
    # a forward dolly maps points at depth Z = tz onto the plane at infinity
    tz = 4.0
    T = make_motion(t=(0.0, 0.0, -tz))
    H = disparity_homography(rig, T)
    d_at_tz = rig.fb / tz
    with pytest.raises(PointAtInfinityError):
        warp_point(H, np.array([0.0, 0.0, d_at_tz]))


def test_oracle_rejects_nonpositive_depth():
    rig = make_rig()
    T = make_motion(t=(0.0, 0.0, -10.0))
    with pytest.raises(BehindCameraError):
        euclidean_warp_oracle(rig, T, np.array([0.0, 0.0, rig.fb / 4.0]))
    with pytest.raises(ValueError):
        euclidean_warp_oracle(rig, np.eye(4), np.array([0.0, 0.0, -1.0]))


def test_warp_pixels_centers_on_principal_point():
    # pixel coordinates are taken relative to (cx, cy); a rig whose principal
    # point is off-center must agree with the oracle in absolute pixels
    rig = StereoRig(f=200.0, b=0.3, cx=40.0, cy=70.0, width=160, height=120, d_max=32)
    T = make_motion(t=(0.05, -0.02, -0.1))
    H = disparity_homography(rig, T)
    xs = np.array([10.0, 80.0, 155.0])
    ys = np.array([5.0, 60.0, 110.0])
    ds = np.array([4.0, 9.0, 17.0])
    wx, wy, wd = warp_pixels(rig, H, xs, ys, ds)
    for i in range(3):
        centered = np.array([xs[i] - rig.cx, ys[i] - rig.cy, ds[i]])
        ox, oy, od = euclidean_warp_oracle(rig, T, centered)
        assert abs(wx[i] - (ox + rig.cx)) < 1e-9
        assert abs(wy[i] - (oy + rig.cy)) < 1e-9
        assert abs(wd[i] - od) < 1e-9
