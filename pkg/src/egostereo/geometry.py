"""Rigid motion acting on disparity-space coordinates.

A pixel with disparity is the homogeneous point w = (x, y, d, 1), with x and
y measured relative to the principal point.  The projective map

    G = [[f, 0, 0, 0],
         [0, f, 0, 0],
         [0, 0, 0, f*b],
         [0, 0, 1, 0]]

links w to homogeneous Euclidean coordinates M = (X, Y, Z, 1) in the camera
frame, so a Euclidean rigid motion T becomes the 4x4 projective transform
H = G @ T @ G^-1 in disparity space.  Warped points are rescaled by their
fourth homogeneous component.

`euclidean_warp_oracle` computes the same mapping the long way
(triangulate, transform, reproject) and exists to cross-check `warp_point`;
production code should use the homography path.
"""

from __future__ import annotations

import numpy as np

from .core import StereoRig, make_motion, validate_rigid_motion


class PointAtInfinityError(ValueError):
    """Warped point has a vanishing fourth homogeneous component."""


class BehindCameraError(ValueError):
    """Transformed point ends up at nonpositive depth."""


def gamma(rig: StereoRig) -> np.ndarray:
    """Projective map from homogeneous Euclidean to disparity-space coords."""
    f, fb = rig.f, rig.fb
    return np.array(
        [
            [f, 0.0, 0.0, 0.0],
            [0.0, f, 0.0, 0.0],
            [0.0, 0.0, 0.0, fb],
            [0.0, 0.0, 1.0, 0.0],
        ]
    )


def gamma_inv(rig: StereoRig) -> np.ndarray:
    """Closed-form inverse of gamma (it is a scaled permutation)."""
    f, fb = rig.f, rig.fb
    return np.array(
        [
            [1.0 / f, 0.0, 0.0, 0.0],
            [0.0, 1.0 / f, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0 / fb, 0.0],
        ]
    )


def disparity_homography(rig: StereoRig, T: np.ndarray) -> np.ndarray:
    """Disparity-space image H = G @ T @ G^-1 of the Euclidean motion T.

    Identity motion maps to the exact identity matrix: evaluating the
    product would otherwise leave f*(1/f) rounding residue, and identity
    motion is contractually a bit-exact fixed point of prediction.
    """
    T = validate_rigid_motion(T)
    if np.array_equal(T, np.eye(4)):
        return np.eye(4)
    H = gamma(rig) @ T @ gamma_inv(rig)
    if abs(np.linalg.det(H)) <= 1e-12:
        raise RuntimeError("disparity homography is singular; rig is corrupt")
    return H


def baseline_offset(rig: StereoRig) -> np.ndarray:
    """Transform taking right-camera coordinates to left-camera coordinates."""
    return make_motion(t=(rig.b, 0.0, 0.0))


def right_motion(rig: StereoRig, T: np.ndarray) -> np.ndarray:
    """Conjugate the left-camera motion into the right-camera frame.

    With B mapping right-frame to left-frame coordinates, the right camera
    experiences B^-1 @ T @ B between the same two instants.
    """
    b = rig.b
    B = make_motion(t=(b, 0.0, 0.0))
    B_inv = make_motion(t=(-b, 0.0, 0.0))
    return B_inv @ T @ B


def warp_point(H: np.ndarray, w) -> np.ndarray:
    """Apply a disparity-space homography to points (x, y, d).

    Coordinates are relative to the principal point.  Accepts a single
    (3,) point or an (..., 3) array.  The result is rescaled by the fourth
    homogeneous component; d' <= 0 is returned as-is (point moved behind or
    level with the camera) and must be rejected by the caller.

    Raises PointAtInfinityError when the fourth component vanishes.
    """
    w = np.asarray(w, dtype=np.float64)
    single = w.ndim == 1
    pts = np.atleast_2d(w)
    ones = np.ones(pts.shape[:-1] + (1,))
    hom = np.concatenate([pts, ones], axis=-1)
    out = hom @ H.T
    w4 = out[..., 3]
    if np.any(np.abs(w4) < 1e-12):
        raise PointAtInfinityError("warped point has ~zero fourth homogeneous component")
    res = out[..., :3] / w4[..., None]
    return res[0] if single else res


def euclidean_warp_oracle(rig: StereoRig, T: np.ndarray, w) -> np.ndarray:
    """Triangulate (x, y, d), move by T in Euclidean space, reproject.

    Independent reference path for warp_point; identical result within
    1e-9 relative error.  Coordinates are relative to the principal point.
    Raises BehindCameraError if any transformed point has depth <= 0.
    """
    T = validate_rigid_motion(T)
    w = np.asarray(w, dtype=np.float64)
    single = w.ndim == 1
    pts = np.atleast_2d(w)
    x, y, d = pts[..., 0], pts[..., 1], pts[..., 2]
    if np.any(d <= 0):
        raise ValueError("disparity must be positive to triangulate")
    Z = rig.fb / d
    X = x * Z / rig.f
    Y = y * Z / rig.f
    M = np.stack([X, Y, Z, np.ones_like(Z)], axis=-1)
    Mp = M @ T.T
    Zp = Mp[..., 2]
    if np.any(Zp <= 0):
        raise BehindCameraError("transformed point has nonpositive depth")
    xp = rig.f * Mp[..., 0] / Zp
    yp = rig.f * Mp[..., 1] / Zp
    dp = rig.fb / Zp
    res = np.stack([xp, yp, dp], axis=-1)
    return res[0] if single else res


def warp_pixels(rig: StereoRig, H: np.ndarray, xs, ys, ds):
    """Warp image-coordinate pixels through H, handling the principal point.

    xs, ys are absolute pixel coordinates; they are shifted to the principal
    point before the homography and shifted back afterwards.  Returns
    (xs', ys', ds') as float arrays; no validity filtering is applied here.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    ds = np.asarray(ds, dtype=np.float64)
    pts = np.stack([xs - rig.cx, ys - rig.cy, ds], axis=-1)
    out = warp_point(H, pts)
    return out[..., 0] + rig.cx, out[..., 1] + rig.cy, out[..., 2]
