"""Temporal stereo disparity estimation.

Ego-motion warps the previous frame's disparity map (with per-pixel
uncertainty) into the current frame, semi-global matching searches only the
predicted 3-sigma interval of each pixel, and a scalar Kalman filter fuses
prediction with measurement.  Subpackages:

    core        shared dataclasses (rig, maps, filter state)
    geometry    disparity-space homography and its Euclidean oracle
    prediction  forward warping, edge rejection, hole filling
    sgm         interval-restricted semi-global matcher
    fusion      per-pixel Kalman update
    synth       ray-cast synthetic scenes with exact ground truth
    kitti_io    KITTI-format PNG/pose/calibration files
    metrics     bad-pixel rates, density, search-space statistics
    pipeline    per-frame engine and sequence runner
    cli         command-line front end
"""

from .core import (
    DisparityMap,
    FilterState,
    GrayImage,
    StereoRig,
    VarianceMap,
    make_empty_state,
    make_invalid_map,
    make_motion,
)
from .fusion import FusionParams, fuse_maps
from .geometry import disparity_homography, euclidean_warp_oracle, warp_point
from .metrics import BadPixelResult, bad_pixel_rate, search_space_fraction
from .pipeline import (
    DisparityPipeline,
    FrameResult,
    PipelineParams,
    Sequence,
    load_sequence,
    run_sequence,
)
from .prediction import PredictionParams, predict_maps
from .sgm import (
    IntervalMap,
    SgmParams,
    full_range_intervals,
    search_intervals,
)

__version__ = "0.1.0"

__all__ = [
    "BadPixelResult",
    "DisparityMap",
    "DisparityPipeline",
    "FilterState",
    "FrameResult",
    "FusionParams",
    "GrayImage",
    "IntervalMap",
    "PipelineParams",
    "PredictionParams",
    "Sequence",
    "SgmParams",
    "StereoRig",
    "VarianceMap",
    "bad_pixel_rate",
    "disparity_homography",
    "euclidean_warp_oracle",
    "full_range_intervals",
    "fuse_maps",
    "load_sequence",
    "make_empty_state",
    "make_invalid_map",
    "make_motion",
    "predict_maps",
    "run_sequence",
    "search_intervals",
    "search_space_fraction",
    "warp_point",
    "__version__",
]
