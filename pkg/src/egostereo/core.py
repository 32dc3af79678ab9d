"""Shared domain types for the temporal stereo pipeline.

Conventions used throughout the package:
  - x grows rightward, y downward, origin at the top-left pixel center
  - disparity d = x_left - x_right >= 0, depth Z = f*b/d
  - all per-pixel grids are row-major numpy arrays of shape (height, width)
  - invalidity is an explicit boolean flag, never a sentinel value; the
    KITTI file format's 0-sentinel is translated at the I/O boundary
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class StereoRig:
    """Calibrated, rectified stereo rig.

    f is the focal length in pixels (shared by both cameras), b the baseline
    in meters, (cx, cy) the principal point in pixels.  d_max is the largest
    disparity the pipeline will ever search or store.
    """

    f: float
    b: float
    cx: float
    cy: float
    width: int
    height: int
    d_max: int

    def __post_init__(self):
        if self.f <= 0:
            raise ValueError(f"focal length must be positive, got {self.f}")
        if self.b <= 0:
            raise ValueError(f"baseline must be positive, got {self.b}")
        if self.d_max < 1:
            raise ValueError(f"d_max must be >= 1, got {self.d_max}")
        if self.d_max >= self.width:
            raise ValueError(
                f"d_max ({self.d_max}) must be smaller than image width ({self.width})"
            )
        if self.width < 2 or self.height < 2:
            raise ValueError(f"image must be at least 2x2, got {self.width}x{self.height}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def fb(self) -> float:
        return self.f * self.b


@dataclass(eq=False)
class GrayImage:
    """8-bit grayscale image; data is a (height, width) uint8 array."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 2:
            raise ValueError(f"image data must be 2-D, got shape {self.data.shape}")
        if self.data.shape[0] < 2 or self.data.shape[1] < 2:
            raise ValueError(f"image must be at least 2x2, got shape {self.data.shape}")
        if self.data.dtype != np.uint8:
            if self.data.min() < 0 or self.data.max() > 255:
                raise ValueError("intensities must lie in [0, 255]")
            self.data = self.data.astype(np.uint8)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(eq=False)
class DisparityMap:
    """Real-valued disparity grid plus an explicit validity mask.

    Readers must check `valid`; values at invalid pixels are meaningless.
    Valid pixels always satisfy 0 < d <= d_max of the owning rig.
    """

    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.values.ndim != 2:
            raise ValueError(f"disparity grid must be 2-D, got shape {self.values.shape}")
        if self.values.shape != self.valid.shape:
            raise ValueError(
                f"value/valid shape mismatch: {self.values.shape} vs {self.valid.shape}"
            )

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def copy(self) -> "DisparityMap":
        return DisparityMap(self.values.copy(), self.valid.copy())


@dataclass(eq=False)
class VarianceMap:
    """Per-pixel disparity variance (pixels^2).

    Validity is owned by the paired DisparityMap; entries outside its valid
    mask are meaningless.
    """

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError(f"variance grid must be 2-D, got shape {self.values.shape}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def copy(self) -> "VarianceMap":
        return VarianceMap(self.values.copy())


@dataclass(eq=False)
class FilterState:
    """Per-view disparity belief carried between frames.

    Each view pairs a DisparityMap with its VarianceMap; the two share the
    disparity map's valid mask.
    """

    left: DisparityMap
    left_var: VarianceMap
    right: DisparityMap
    right_var: VarianceMap
    frame: int = 0

    def __post_init__(self):
        shapes = {
            self.left.shape,
            self.left_var.shape,
            self.right.shape,
            self.right_var.shape,
        }
        if len(shapes) != 1:
            raise ValueError(f"state maps disagree on dimensions: {shapes}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.left.shape


def make_invalid_map(width: int, height: int) -> DisparityMap:
    """All-invalid disparity map, the empty belief for a fresh pipeline."""
    if width < 2 or height < 2:
        raise ValueError(f"map must be at least 2x2, got {width}x{height}")
    return DisparityMap(
        values=np.zeros((height, width), dtype=np.float64),
        valid=np.zeros((height, width), dtype=bool),
    )


def make_empty_state(rig: StereoRig, frame: int = 0) -> FilterState:
    """FilterState with no valid pixels in either view."""
    h, w = rig.height, rig.width
    return FilterState(
        left=make_invalid_map(w, h),
        left_var=VarianceMap(np.zeros((h, w))),
        right=make_invalid_map(w, h),
        right_var=VarianceMap(np.zeros((h, w))),
        frame=frame,
    )


def validate_rigid_motion(T: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Check that T is a proper 4x4 rigid transform and return it as float64.

    The rotation block must be orthonormal with determinant +1 within tol,
    and the last row exactly (0, 0, 0, 1).
    """
    T = np.asarray(T, dtype=np.float64)
    if T.shape != (4, 4):
        raise ValueError(f"rigid motion must be 4x4, got shape {T.shape}")
    if not np.array_equal(T[3], [0.0, 0.0, 0.0, 1.0]):
        raise ValueError(f"last row must be (0,0,0,1), got {T[3]}")
    R = T[:3, :3]
    if not np.allclose(R.T @ R, np.eye(3), atol=tol):
        raise ValueError("rotation block is not orthonormal")
    if abs(np.linalg.det(R) - 1.0) > max(tol, 1e-9):
        raise ValueError(f"rotation determinant must be +1, got {np.linalg.det(R)}")
    return T


def make_motion(R: np.ndarray | None = None, t=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Assemble a 4x4 rigid transform from a rotation block and translation."""
    T = np.eye(4)
    if R is not None:
        T[:3, :3] = np.asarray(R, dtype=np.float64)
    T[:3, 3] = np.asarray(t, dtype=np.float64)
    return validate_rigid_motion(T)


def check_map_pair(disp: DisparityMap, var: VarianceMap, rig: StereoRig) -> None:
    """Assert the shared invariants of a (DisparityMap, VarianceMap) pair.

    Called after every pipeline stage: valid disparities lie in (0, d_max],
    valid variances are nonnegative, and dimensions match the rig.
    """
    if disp.shape != rig.shape:
        raise AssertionError(f"map shape {disp.shape} != rig shape {rig.shape}")
    if var.shape != disp.shape:
        raise AssertionError(f"variance shape {var.shape} != map shape {disp.shape}")
    v = disp.values[disp.valid]
    if v.size:
        if v.min() <= 0.0 or v.max() > rig.d_max:
            raise AssertionError(
                f"valid disparities outside (0, {rig.d_max}]: "
                f"range [{v.min()}, {v.max()}]"
            )
    pv = var.values[disp.valid]
    if pv.size and pv.min() < 0.0:
        raise AssertionError(f"negative variance at valid pixel: {pv.min()}")


def check_state(state: FilterState, rig: StereoRig) -> None:
    """Assert FilterState invariants for both views."""
    check_map_pair(state.left, state.left_var, rig)
    check_map_pair(state.right, state.right_var, rig)
