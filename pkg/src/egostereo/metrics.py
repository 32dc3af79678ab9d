"""Disparity-map evaluation: bad-pixel rates, density, search-space size.

The bad-pixel test has two modes.  "or" flags a pixel when the absolute
error exceeds 3 px OR the relative error exceeds 5 %, which is the stricter
test and the default here; "and" requires both to fail, the convention of
the KITTI 2015 benchmark.  Every rate is reported both over the pixels the
estimate actually produced and with unestimated ground-truth pixels counted
as bad, alongside the estimate's density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DisparityMap
from .sgm import IntervalMap

ABS_THRESHOLD = 3.0
REL_THRESHOLD = 0.05


@dataclass(frozen=True)
class BadPixelResult:
    """Error rates of an estimate against ground truth.

    rate          bad fraction over pixels valid in both maps
    rate_all      bad fraction over all ground-truth pixels, counting
                  pixels the estimate missed as bad
    density       fraction of ground-truth pixels the estimate covers
    """

    rate: float
    rate_all: float
    density: float


def bad_pixel_rate(
    estimate: DisparityMap, truth: DisparityMap, mode: str = "or"
) -> BadPixelResult:
    """Fraction of pixels whose disparity error is beyond threshold.

    mode="or": bad iff |err| > 3 px or |err| > 5 % of the true disparity.
    mode="and": bad iff both hold (KITTI 2015 rule).
    Pixels invalid in the ground truth are ignored entirely.
    """
    if mode not in ("or", "and"):
        raise ValueError(f"mode must be 'or' or 'and', got {mode!r}")
    if estimate.shape != truth.shape:
        raise ValueError("map dimensions differ")
    gt = truth.valid
    n_gt = int(gt.sum())
    if n_gt == 0:
        return BadPixelResult(0.0, 0.0, 0.0)
    both = gt & estimate.valid
    err = np.abs(estimate.values - truth.values)
    over_abs = err > ABS_THRESHOLD
    over_rel = err > REL_THRESHOLD * truth.values
    bad = (over_abs | over_rel) if mode == "or" else (over_abs & over_rel)
    n_both = int(both.sum())
    n_bad = int((bad & both).sum())
    n_missing = n_gt - n_both
    rate = n_bad / n_both if n_both else 0.0
    return BadPixelResult(rate, (n_bad + n_missing) / n_gt, n_both / n_gt)


def bad_pixel_mask(
    estimate: DisparityMap, truth: DisparityMap, mode: str = "or"
) -> np.ndarray:
    """Boolean mask of bad pixels over the jointly valid region."""
    if mode not in ("or", "and"):
        raise ValueError(f"mode must be 'or' or 'and', got {mode!r}")
    err = np.abs(estimate.values - truth.values)
    over_abs = err > ABS_THRESHOLD
    over_rel = err > REL_THRESHOLD * truth.values
    bad = (over_abs | over_rel) if mode == "or" else (over_abs & over_rel)
    return bad & estimate.valid & truth.valid


def density(estimate: DisparityMap) -> float:
    """Valid fraction of the map."""
    return float(estimate.valid.mean())


def search_space_fraction(intervals: IntervalMap) -> float:
    """Searched cost-volume cells as a fraction of the full-range volume."""
    widths = intervals.hi - intervals.lo + 1
    total = intervals.lo.size * (intervals.d_max + 1)
    return float(widths.sum() / total)


def error_image(
    estimate: DisparityMap, truth: DisparityMap, mode: str = "or"
) -> np.ndarray:
    """RGB visualization: blue = within threshold, red = bad, black = no data."""
    h, w = estimate.shape
    img = np.zeros((h, w, 3), dtype=np.uint8)
    both = estimate.valid & truth.valid
    bad = bad_pixel_mask(estimate, truth, mode)
    img[both & ~bad] = (40, 90, 220)
    img[bad] = (220, 50, 40)
    return img
