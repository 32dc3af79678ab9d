"""Forward-warping of the disparity belief into the current frame.

Every valid pixel of the previous state is pushed through the disparity-space
homography of the inter-frame motion, landing on the nearest integer pixel.
When several sources collide the largest warped disparity survives (nearest
surface occludes the rest).  Variance rides along via the squared disparity
ratio plus a constant motion-noise term.  Pixels sitting on disparity
discontinuities are dropped before warping, and one-pixel gaps opened by
forward motion ("zoom holes") are interpolated afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import DisparityMap, FilterState, StereoRig, VarianceMap, validate_rigid_motion
from .geometry import disparity_homography, right_motion, warp_pixels


@dataclass(frozen=True)
class PredictionParams:
    """Tunables of the prediction stage.

    q         motion-noise variance added on every propagation (pixels^2)
    gamma_f   max neighbor difference for zoom-hole interpolation (pixels)
    gamma_e   max neighborhood disparity range before edge rejection (pixels)
    edge_window  neighborhood radius of the edge test
    edge_reject / fill_holes  stage toggles
    """

    q: float = 0.5
    gamma_f: float = 3.0
    gamma_e: float = 3.0
    edge_window: int = 1
    edge_reject: bool = True
    fill_holes: bool = True

    def __post_init__(self):
        if self.q < 0:
            raise ValueError(f"q must be >= 0, got {self.q}")
        if self.gamma_f <= 0 or self.gamma_e <= 0:
            raise ValueError("gamma_f and gamma_e must be positive")
        if self.edge_window < 1:
            raise ValueError(f"edge_window must be >= 1, got {self.edge_window}")


def reject_edges(disp: DisparityMap, gamma_e: float, edge_window: int) -> np.ndarray:
    """Mark source pixels whose neighborhood spans a disparity discontinuity.

    A valid pixel is rejected iff max-min over the valid disparities in its
    (2*edge_window+1)^2 neighborhood exceeds gamma_e.  Returns a boolean
    `rejected` grid; invalid pixels are never marked.
    """
    size = 2 * edge_window + 1
    hi = ndimage.maximum_filter(
        np.where(disp.valid, disp.values, -np.inf), size=size, mode="constant", cval=-np.inf
    )
    lo = ndimage.minimum_filter(
        np.where(disp.valid, disp.values, np.inf), size=size, mode="constant", cval=np.inf
    )
    return disp.valid & ((hi - lo) > gamma_e)


def propagate_variance(d_prev, d_pred, p_prev, q: float):
    """Variance after motion: (d_pred/d_prev)^2 * p_prev + q.

    The disparity ratio is the per-pixel linearized system model; computing
    it from the already-warped disparity avoids an analytic Jacobian.
    """
    d_prev = np.asarray(d_prev, dtype=np.float64)
    if np.any(d_prev <= 0):
        raise ValueError("previous disparity must be positive")
    ratio = np.asarray(d_pred, dtype=np.float64) / d_prev
    return ratio * ratio * np.asarray(p_prev, dtype=np.float64) + q


def _predict_view(
    disp: DisparityMap,
    var: VarianceMap,
    H: np.ndarray,
    rig: StereoRig,
    params: PredictionParams,
):
    """Warp one view's belief; serial row-major collision semantics."""
    h, w = disp.shape
    src = disp.valid.copy()
    if params.edge_reject:
        src &= ~reject_edges(disp, params.gamma_e, params.edge_window)

    out_d = np.zeros((h, w))
    out_p = np.zeros((h, w))
    out_valid = np.zeros((h, w), dtype=bool)
    if not src.any():
        return DisparityMap(out_d, out_valid), VarianceMap(out_p)

    sy, sx = np.nonzero(src)
    d = disp.values[sy, sx]
    p = var.values[sy, sx]
    xp, yp, dp = warp_pixels(rig, H, sx, sy, d)

    tx = np.rint(xp).astype(np.int64)
    ty = np.rint(yp).astype(np.int64)
    keep = (tx >= 0) & (tx < w) & (ty >= 0) & (ty < h) & (dp > 0) & (dp <= rig.d_max)
    if not keep.any():
        return DisparityMap(out_d, out_valid), VarianceMap(out_p)

    tx, ty, dp = tx[keep], ty[keep], dp[keep]
    pp = propagate_variance(d[keep], dp, p[keep], params.q)

    # collisions: highest warped disparity wins; ties go to the source with
    # the smallest row-major index, matching the serial reference order
    tgt = ty * w + tx
    src_idx = sy[keep] * w + sx[keep]
    order = np.lexsort((src_idx, -dp, tgt))
    tgt, dp, pp = tgt[order], dp[order], pp[order]
    first = np.ones(tgt.size, dtype=bool)
    first[1:] = tgt[1:] != tgt[:-1]
    tgt, dp, pp = tgt[first], dp[first], pp[first]

    out_valid.flat[tgt] = True
    out_d.flat[tgt] = dp
    out_p.flat[tgt] = pp
    return DisparityMap(out_d, out_valid), VarianceMap(out_p)


def predict_maps(
    state: FilterState, T: np.ndarray, rig: StereoRig, params: PredictionParams
) -> FilterState:
    """Warp both views of the previous state into the current frame.

    The left view moves by T directly; the right view by T conjugated with
    the baseline offset.  Hole filling is a separate stage
    (see fill_zoom_holes); an empty prediction is a legal result.
    """
    if state.shape != rig.shape:
        raise ValueError(f"state shape {state.shape} != rig shape {rig.shape}")
    T = validate_rigid_motion(T)
    H_left = disparity_homography(rig, T)
    H_right = disparity_homography(rig, right_motion(rig, T))
    left_d, left_p = _predict_view(state.left, state.left_var, H_left, rig, params)
    right_d, right_p = _predict_view(state.right, state.right_var, H_right, rig, params)
    return FilterState(left_d, left_p, right_d, right_p, frame=state.frame + 1)


def _fill_axis(d, p, valid, gamma_f: float, q: float, axis: int):
    """Fill one-pixel gaps along one axis, simultaneously over the grid."""
    d_prev = np.roll(d, 1, axis=axis)
    d_next = np.roll(d, -1, axis=axis)
    p_prev = np.roll(p, 1, axis=axis)
    p_next = np.roll(p, -1, axis=axis)
    v_prev = np.roll(valid, 1, axis=axis)
    v_next = np.roll(valid, -1, axis=axis)
    # roll wraps around; the first/last line has no true neighbor on one side
    edge = [slice(None)] * d.ndim
    edge[axis] = 0
    v_prev[tuple(edge)] = False
    edge[axis] = -1
    v_next[tuple(edge)] = False

    fill = ~valid & v_prev & v_next & (np.abs(d_prev - d_next) < gamma_f)
    d = np.where(fill, 0.5 * (d_prev + d_next), d)
    p = np.where(fill, np.maximum(p_prev, p_next) + q, p)
    return d, p, valid | fill


def fill_zoom_holes(
    disp: DisparityMap, var: VarianceMap, gamma_f: float, q: float
) -> tuple[DisparityMap, VarianceMap]:
    """Interpolate single-pixel gaps left by forward motion.

    An invalid pixel whose two horizontal neighbors are valid and differ by
    less than gamma_f becomes their mean; the same rule then runs vertically
    over the updated grid.  A filled pixel inherits the larger neighbor
    variance plus q, so interpolation never claims more confidence than its
    sources.  Wider gaps are left untouched.
    """
    d, p, valid = disp.values.copy(), var.values.copy(), disp.valid.copy()
    d, p, valid = _fill_axis(d, p, valid, gamma_f, q, axis=1)
    d, p, valid = _fill_axis(d, p, valid, gamma_f, q, axis=0)
    return DisparityMap(np.where(valid, d, 0.0), valid), VarianceMap(p)
