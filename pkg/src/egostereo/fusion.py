"""Per-pixel scalar Kalman fusion of predicted and measured disparities.

Each pixel runs an independent one-dimensional filter: the prediction
carries variance p, the measurement variance r, and the fused estimate is
the variance-weighted blend of the two.  Pixels measured for the first
time are adopted at a fixed initial variance; pixels whose prediction went
unconfirmed by any measurement are dropped rather than coasted, so stale
geometry cannot survive occlusion or consistency rejection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DisparityMap, VarianceMap

@dataclass(frozen=True)
class FusionParams:
    """p_init is the variance assigned to freshly adopted measurements."""

    p_init: float = 1.0

    def __post_init__(self):
        if self.p_init <= 0:
            raise ValueError(f"p_init must be positive, got {self.p_init}")


def kalman_gain(p: np.ndarray, r: np.ndarray) -> np.ndarray:
    """K = p / (p + r), elementwise."""
    return np.asarray(p, dtype=np.float64) / (np.asarray(p) + np.asarray(r))


def fuse_pixel(d_pred: float, p_pred: float, d_meas: float, r_meas: float):
    """Scalar update: returns (d_post, p_post).

    The posterior lands between prediction and measurement and its variance
    p*r/(p+r) never exceeds the smaller of the two inputs.
    """
    k = p_pred / (p_pred + r_meas)
    return d_pred + k * (d_meas - d_pred), (1.0 - k) * p_pred


def fuse_maps(
    d_pred: DisparityMap,
    p_pred: VarianceMap,
    d_meas: DisparityMap,
    r_meas: VarianceMap,
    params: FusionParams,
) -> tuple[DisparityMap, VarianceMap]:
    """Combine prediction and measurement maps into the posterior state.

    Per pixel:
      - both valid       -> Kalman blend of the two values
      - measurement only -> adopt the measurement at variance p_init
      - prediction only  -> invalid (predictions are never carried forward
                            without confirmation)
      - neither          -> invalid
    """
    if d_pred.shape != d_meas.shape:
        raise ValueError("map dimensions differ")
    both = d_pred.valid & d_meas.valid
    meas_only = d_meas.valid & ~d_pred.valid

    p = p_pred.values
    r = r_meas.values
    with np.errstate(invalid="ignore", divide="ignore"):
        k = np.where(both, p / (p + r), 0.0)
    values = np.where(both, d_pred.values + k * (d_meas.values - d_pred.values), 0.0)
    variance = np.where(both, (1.0 - k) * p, 0.0)

    values = np.where(meas_only, d_meas.values, values)
    variance = np.where(meas_only, params.p_init, variance)

    valid = both | meas_only
    values = np.where(valid, values, 0.0)
    variance = np.where(valid, variance, 0.0)
    return DisparityMap(values, valid), VarianceMap(variance)
