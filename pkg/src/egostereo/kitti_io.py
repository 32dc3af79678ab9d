"""File I/O in the KITTI odometry/stereo conventions.

Disparity maps travel as 16-bit grayscale PNGs holding round(256 * d), with
0 reserved for invalid pixels; poses as text files of 12 floats per line
(row-major 3x4 world-from-camera matrices); calibration as P0/P1 projection
rows.  Readers validate aggressively and raise FileFormatError with the
offending path (and line, where applicable) so a bad dataset fails loudly
instead of producing quietly wrong geometry.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import cv2
import numpy as np

from .core import DisparityMap, GrayImage

DISPARITY_SCALE = 256.0


class FileFormatError(ValueError):
    """A file exists but does not hold what the format promises."""


@dataclass(frozen=True)
class CalibData:
    """Intrinsics shared by the pair plus the stereo baseline (meters)."""

    f: float
    cx: float
    cy: float
    b: float


def write_disparity_png(path: str, disp: DisparityMap) -> None:
    """Store a disparity map as a 16-bit PNG of round(256 * d), 0 = invalid."""
    values = disp.values
    if np.any(disp.valid & (values * DISPARITY_SCALE >= np.iinfo(np.uint16).max + 0.5)):
        raise ValueError(f"disparity too large for 16-bit encoding in {path}")
    raw = np.rint(values * DISPARITY_SCALE)
    raw = np.where(disp.valid, np.maximum(raw, 1.0), 0.0).astype(np.uint16)
    if not cv2.imwrite(path, raw):
        raise OSError(f"could not write {path}")


def read_disparity_png(path: str) -> DisparityMap:
    """Inverse of write_disparity_png."""
    raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise FileFormatError(f"{path}: not a readable image")
    if raw.dtype != np.uint16 or raw.ndim != 2:
        raise FileFormatError(
            f"{path}: expected single-channel 16-bit PNG, got {raw.dtype} ndim={raw.ndim}"
        )
    valid = raw > 0
    return DisparityMap(raw.astype(np.float64) / DISPARITY_SCALE, valid)


def write_gray_png(path: str, image: GrayImage) -> None:
    if not cv2.imwrite(path, image.data):
        raise OSError(f"could not write {path}")


def read_gray_png(path: str) -> GrayImage:
    raw = cv2.imread(path, cv2.IMREAD_GRAYSCALE)
    if raw is None:
        raise FileFormatError(f"{path}: not a readable image")
    return GrayImage(raw)


def write_color_png(path: str, rgb: np.ndarray) -> None:
    """Store an (H, W, 3) uint8 RGB array (error visualizations etc.)."""
    rgb = np.asarray(rgb)
    if rgb.dtype != np.uint8 or rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) uint8 array, got {rgb.dtype} {rgb.shape}")
    if not cv2.imwrite(path, cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR)):
        raise OSError(f"could not write {path}")


def _parse_floats(path: str, lineno: int, line: str, expect: int) -> np.ndarray:
    parts = line.split()
    try:
        vals = np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError:
        raise FileFormatError(f"{path}:{lineno}: non-numeric field") from None
    if vals.size != expect:
        raise FileFormatError(
            f"{path}:{lineno}: expected {expect} values, got {vals.size}"
        )
    return vals


def write_pose_file(path: str, poses: list[np.ndarray]) -> None:
    """One 3x4 world-from-camera matrix per line, row-major, full precision."""
    lines = []
    for pose in poses:
        pose = np.asarray(pose, dtype=np.float64)
        if pose.shape == (4, 4):
            pose = pose[:3, :]
        if pose.shape != (3, 4):
            raise ValueError(f"pose must be 3x4 or 4x4, got {pose.shape}")
        lines.append(" ".join(f"{v:.17g}" for v in pose.ravel()))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_pose_file(path: str, tol: float = 1e-6) -> list[np.ndarray]:
    """Read 4x4 world-from-camera poses, checking rotation orthonormality."""
    poses = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            vals = _parse_floats(path, lineno, line, 12)
            mat = np.eye(4)
            mat[:3, :] = vals.reshape(3, 4)
            rot = mat[:3, :3]
            if not np.allclose(rot.T @ rot, np.eye(3), atol=tol):
                raise FileFormatError(
                    f"{path}:{lineno}: rotation block is not orthonormal"
                )
            if np.linalg.det(rot) < 0:
                raise FileFormatError(
                    f"{path}:{lineno}: rotation block has negative determinant"
                )
            poses.append(mat)
    if not poses:
        raise FileFormatError(f"{path}: no poses found")
    return poses


def write_calib_file(path: str, calib: CalibData) -> None:
    """P0/P1 projection rows for a rectified pair with shared intrinsics."""
    p0 = np.zeros((3, 4))
    p0[0, 0] = p0[1, 1] = calib.f
    p0[0, 2] = calib.cx
    p0[1, 2] = calib.cy
    p0[2, 2] = 1.0
    p1 = p0.copy()
    p1[0, 3] = -calib.f * calib.b
    with open(path, "w") as fh:
        fh.write("P0: " + " ".join(f"{v:.17g}" for v in p0.ravel()) + "\n")
        fh.write("P1: " + " ".join(f"{v:.17g}" for v in p1.ravel()) + "\n")


def read_calib_file(path: str, tol: float = 1e-6) -> CalibData:
    """Recover f, cx, cy and baseline from P0/P1 projection rows."""
    mats = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            key, _, rest = line.partition(":")
            key = key.strip()
            if key in ("P0", "P1"):
                mats[key] = _parse_floats(path, lineno, rest, 12).reshape(3, 4)
    for key in ("P0", "P1"):
        if key not in mats:
            raise FileFormatError(f"{path}: missing {key} line")
    p0, p1 = mats["P0"], mats["P1"]
    f = p0[0, 0]
    if f <= 0:
        raise FileFormatError(f"{path}: focal length must be positive, got {f}")
    if abs(p1[0, 0] - f) > tol * abs(f):
        raise FileFormatError(
            f"{path}: P0/P1 focal lengths disagree ({f} vs {p1[0, 0]})"
        )
    b = -p1[0, 3] / f
    if b <= 0:
        raise FileFormatError(f"{path}: baseline must be positive, got {b}")
    return CalibData(f=f, cx=p0[0, 2], cy=p0[1, 2], b=b)


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
