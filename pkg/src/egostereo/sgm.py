"""Semi-global matching over per-pixel reduced disparity intervals.

The matcher differs from a textbook SGM in one way: every pixel carries its
own admissible disparity interval, derived from the predicted disparity and
its variance as [d - 3*sqrt(p), d + 3*sqrt(p)].  Costs outside a pixel's
interval are +inf; the eight aggregation paths simply never select them, and
the predecessor minimum in the recurrence is taken over the predecessor's
own interval.  Pixels with no prediction search the full [0, d_max] range,
so frame 0 degenerates to ordinary full-range SGM.

Measurement uncertainty is estimated by counting, on each side of the cost
minimum, how many neighboring disparities fit under a cost-sum budget: wide
flat valleys count many neighbors (uncertain), sharp minima count none.
This keeps the variance finite even on textureless input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DisparityMap, GrayImage, StereoRig, VarianceMap

_BORDER_INTENSITY_COST = 255  # per-pixel saturating cost for off-image patches


@dataclass(frozen=True)
class SgmParams:
    """Matcher tunables.

    window   odd side of the SAD matching window
    p1, p2   small/large smoothness penalties (cost units of the SAD window)
    s_max    cost-sum budget of the variance counting walk
    r_min    floor on the measurement variance (pixels^2)
    tau_lr   left-right consistency tolerance (pixels)
    tau_sad  SAD acceptance threshold of the measurement check
    """

    window: int = 3
    p1: float = 7.0
    p2: float = 86.0
    s_max: float = 10.0
    r_min: float = 0.25
    tau_lr: float = 1.0
    tau_sad: float = 200.0

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"window must be odd and >= 3, got {self.window}")
        if not (0 < self.p1 <= self.p2):
            raise ValueError(f"penalties must satisfy 0 < P1 <= P2, got {self.p1}, {self.p2}")
        if self.s_max <= 0:
            raise ValueError(f"s_max must be positive, got {self.s_max}")
        if self.r_min <= 0:
            raise ValueError(f"r_min must be positive, got {self.r_min}")

    @property
    def border_cost(self) -> float:
        return float(self.window * self.window * _BORDER_INTENSITY_COST)


@dataclass(eq=False)
class IntervalMap:
    """Per-pixel admissible disparity interval [lo, hi], both inclusive."""

    lo: np.ndarray
    hi: np.ndarray
    d_max: int

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=np.int64)
        self.hi = np.asarray(self.hi, dtype=np.int64)
        if self.lo.shape != self.hi.shape:
            raise ValueError("lo/hi shape mismatch")
        if self.lo.min() < 0 or self.hi.max() > self.d_max or np.any(self.lo > self.hi):
            raise ValueError("intervals must satisfy 0 <= lo <= hi <= d_max")

    @property
    def shape(self) -> tuple[int, int]:
        return self.lo.shape

    def contains(self, d: int) -> np.ndarray:
        return (self.lo <= d) & (d <= self.hi)


@dataclass(eq=False)
class CostVolume:
    """Matching costs per pixel and disparity; +inf outside the interval."""

    data: np.ndarray  # (H, W, d_max+1) float32
    intervals: IntervalMap


def full_range_intervals(rig: StereoRig) -> IntervalMap:
    """Every pixel searches [0, d_max]; the frame-0 state of the pipeline."""
    shape = rig.shape
    return IntervalMap(
        np.zeros(shape, dtype=np.int64),
        np.full(shape, rig.d_max, dtype=np.int64),
        rig.d_max,
    )


def search_intervals(
    d_pred: DisparityMap, p_pred: VarianceMap, rig: StereoRig
) -> IntervalMap:
    """Per-pixel interval [d - 3*sqrt(p), d + 3*sqrt(p)], rounded outward.

    Intervals are clamped to [0, d_max] and widened (alternating sides) to a
    minimum width of 2 so degenerate zero-variance predictions cannot pin
    the matcher to a single disparity.  Unpredicted pixels get full range.
    """
    d_max = rig.d_max
    sigma3 = 3.0 * np.sqrt(np.maximum(p_pred.values, 0.0))
    lo = np.floor(d_pred.values - sigma3).astype(np.int64)
    hi = np.ceil(d_pred.values + sigma3).astype(np.int64)
    lo = np.clip(lo, 0, d_max)
    hi = np.clip(hi, 0, d_max)
    for _ in range(2):
        narrow = (hi - lo) < 2
        lo = np.where(narrow & (lo > 0), lo - 1, lo)
        narrow = (hi - lo) < 2
        hi = np.where(narrow & (hi < d_max), hi + 1, hi)
    lo = np.where(d_pred.valid, lo, 0)
    hi = np.where(d_pred.valid, hi, d_max)
    return IntervalMap(lo, hi, d_max)


def _box_sum(a: np.ndarray, radius: int) -> np.ndarray:
    """Exact integer window sums with edge replication at the borders."""
    pad = np.pad(a, radius, mode="edge").astype(np.int64)
    ii = pad.cumsum(axis=0).cumsum(axis=1)
    ii = np.pad(ii, ((1, 0), (1, 0)))
    k = 2 * radius + 1
    return ii[k:, k:] - ii[:-k, k:] - ii[k:, :-k] + ii[:-k, :-k]


def _shifted_abs_diff(ref: np.ndarray, other: np.ndarray, d: int, view: str):
    """|ref - other shifted by d| and the mask of off-image match centers."""
    h, w = ref.shape
    shifted = np.empty_like(other)
    xs = np.arange(w)
    if view == "left":
        # match pixel x against other-image pixel x - d
        shifted[:, d:] = other[:, : w - d] if d else other
        if d:
            shifted[:, :d] = other[:, :1]
        off = xs < d
    else:
        # right reference: match pixel x against other-image pixel x + d
        shifted[:, : w - d] = other[:, d:] if d else other
        if d:
            shifted[:, w - d :] = other[:, -1:]
        off = xs > w - 1 - d
    diff = np.abs(ref.astype(np.int16) - shifted.astype(np.int16))
    return diff, np.broadcast_to(off, (h, w))


def matching_cost(
    left: GrayImage,
    right: GrayImage,
    intervals: IntervalMap,
    params: SgmParams,
    view: str = "left",
) -> CostVolume:
    """Windowed SAD costs on the admissible disparities of each pixel.

    view="left" matches left pixels against the right image (the usual
    direction); view="right" mirrors the match for the right disparity map.
    Match centers falling off the other image receive the saturating border
    cost; window samples beyond any border are edge-replicated.
    """
    if left.data.shape != right.data.shape:
        raise ValueError(
            f"image dimensions differ: {left.data.shape} vs {right.data.shape}"
        )
    if view not in ("left", "right"):
        raise ValueError(f"view must be 'left' or 'right', got {view!r}")
    ref = left.data if view == "left" else right.data
    other = right.data if view == "left" else left.data
    h, w = ref.shape
    d_max = intervals.d_max
    radius = params.window // 2

    volume = np.full((h, w, d_max + 1), np.inf, dtype=np.float32)
    for d in range(int(intervals.lo.min()), int(intervals.hi.max()) + 1):
        in_interval = intervals.contains(d)
        if not in_interval.any():
            continue
        diff, off = _shifted_abs_diff(ref, other, d, view)
        sad = _box_sum(diff, radius).astype(np.float32)
        sad = np.where(off, np.float32(params.border_cost), sad)
        plane = volume[:, :, d]
        plane[in_interval] = sad[in_interval]
    return CostVolume(volume, intervals)


def _path_step(prev: np.ndarray, cost: np.ndarray, p1: float, p2: float) -> np.ndarray:
    """One SGM recurrence step; prev und cost are (M, D) slices.

    Out-of-interval entries are +inf in both inputs; the predecessor minimum
    is finite because every pixel's interval holds at least one finite cost.
    """
    m = prev.min(axis=1, keepdims=True)
    cand = np.minimum(prev, m + p2)
    cand[:, 1:] = np.minimum(cand[:, 1:], prev[:, :-1] + p1)
    cand[:, :-1] = np.minimum(cand[:, :-1], prev[:, 1:] + p1)
    return cost + (cand - m)


def _scan_vertical(cost: np.ndarray, p1, p2, reverse: bool, dx: int) -> np.ndarray:
    """Aggregate along one vertical-ish direction (dy = +-1, dx in -1/0/1).

    Iterates over rows; the predecessor row is shifted by dx columns.  Pixels
    whose predecessor falls outside the image restart with their raw cost.
    """
    h, w, D = cost.shape
    out = np.empty_like(cost)
    rows = range(h - 1, -1, -1) if reverse else range(h)
    first = True
    prev_row = None
    for y in rows:
        if first:
            out[y] = cost[y]
            first = False
        else:
            if dx == 0:
                out[y] = _path_step(prev_row, cost[y], p1, p2)
            elif dx > 0:
                out[y, dx:] = _path_step(prev_row[:-dx], cost[y, dx:], p1, p2)
                out[y, :dx] = cost[y, :dx]
            else:
                out[y, :dx] = _path_step(prev_row[-dx:], cost[y, :dx], p1, p2)
                out[y, dx:] = cost[y, dx:]
        prev_row = out[y]
    return out


def _scan_horizontal(cost: np.ndarray, p1, p2, reverse: bool) -> np.ndarray:
    """Aggregate along a purely horizontal direction (dx = +-1)."""
    h, w, D = cost.shape
    out = np.empty_like(cost)
    cols = range(w - 1, -1, -1) if reverse else range(w)
    first = True
    prev_col = None
    for x in cols:
        if first:
            out[:, x] = cost[:, x]
            first = False
        else:
            out[:, x] = _path_step(prev_col, cost[:, x], p1, p2)
        prev_col = out[:, x]
    return out


def aggregate_paths(volume: CostVolume, params: SgmParams) -> CostVolume:
    """Sum the SGM path recurrence over the eight cardinal/diagonal paths.

    Each direction's contribution is computed on its own plane and summed,
    so the result is independent of evaluation order.
    """
    cost = volume.data.astype(np.float32)
    p1, p2 = params.p1, params.p2
    total = np.zeros_like(cost)
    total += _scan_horizontal(cost, p1, p2, reverse=False)
    total += _scan_horizontal(cost, p1, p2, reverse=True)
    for reverse in (False, True):
        for dx in (-1, 0, 1):
            total += _scan_vertical(cost, p1, p2, reverse=reverse, dx=dx)
    total[~np.isfinite(cost)] = np.inf
    return CostVolume(total, volume.intervals)


def select_disparity(aggregated: CostVolume) -> DisparityMap:
    """Winner-take-all over each pixel's interval; ties go to the smaller d.

    A winning disparity of 0 encodes "infinitely far" and cannot be stored
    as a valid value, so those pixels come back invalid (mirroring the
    0-sentinel of the KITTI disparity format).
    """
    winners = np.argmin(aggregated.data, axis=2)
    valid = winners > 0
    return DisparityMap(winners.astype(np.float64), valid)


def matching_variance(
    costs: np.ndarray, lo: int, d_star: int, params: SgmParams
) -> float:
    """Variance of one matched pixel from its interval cost profile.

    costs holds the aggregated costs over [lo, hi]; d_star is the selected
    (absolute) disparity.  Walking outward from the minimum, neighbors are
    counted while the running sum of min-subtracted costs stays below the
    budget s_max; the count is floored at r_min.
    """
    costs = np.asarray(costs, dtype=np.float64)
    center = d_star - lo
    if not 0 <= center < costs.size:
        raise ValueError(f"selected disparity {d_star} outside interval starting at {lo}")
    rel = costs - costs[center]
    n_l = 0
    s = 0.0
    for i in range(center - 1, -1, -1):
        s += rel[i]
        if s >= params.s_max:
            break
        n_l += 1
    n_r = 0
    s = 0.0
    for i in range(center + 1, costs.size):
        s += rel[i]
        if s >= params.s_max:
            break
        n_r += 1
    return float(max(n_l + n_r, params.r_min))


def matching_variance_map(
    aggregated: CostVolume, disp: DisparityMap, params: SgmParams
) -> VarianceMap:
    """Vectorized matching_variance over a whole disparity map."""
    data = aggregated.data
    h, w, D = data.shape
    lo, hi = aggregated.intervals.lo, aggregated.intervals.hi
    d_star = disp.values.astype(np.int64)
    c_star = np.take_along_axis(data, d_star[..., None], axis=2)[..., 0]

    counts = np.zeros((h, w), dtype=np.int64)
    for sign, bound in ((-1, lo), (1, hi)):
        s = np.zeros((h, w))
        active = np.ones((h, w), dtype=bool)
        for k in range(1, D):
            j = d_star + sign * k
            active &= (j >= bound) if sign < 0 else (j <= bound)
            if not active.any():
                break
            c = np.take_along_axis(data, np.clip(j, 0, D - 1)[..., None], axis=2)[..., 0]
            s = np.where(active, s + (c - c_star), s)
            ok = active & (s < params.s_max)
            counts += ok
            active = ok
    r = np.maximum(counts.astype(np.float64), params.r_min)
    return VarianceMap(r)


def lr_consistency(
    d_left: DisparityMap, d_right: DisparityMap, tau_lr: float
) -> tuple[np.ndarray, np.ndarray]:
    """Cross-check the two views' disparities; returns (keep_left, keep_right).

    A left pixel (x, y, d) survives iff the right map is valid at
    (x - round(d), y) and agrees within tau_lr; symmetrically for the right
    map.  Pixels whose counterpart falls off-image are dropped.
    """
    if d_left.shape != d_right.shape:
        raise ValueError("map dimensions differ")
    h, w = d_left.shape
    xs = np.arange(w)[None, :]
    ys = np.arange(h)[:, None]

    def check(src: DisparityMap, dst: DisparityMap, sign: int) -> np.ndarray:
        xo = xs + sign * np.rint(src.values).astype(np.int64)
        inb = (xo >= 0) & (xo < w)
        xo_safe = np.clip(xo, 0, w - 1)
        dst_valid = dst.valid[ys, xo_safe]
        agree = np.abs(src.values - dst.values[ys, xo_safe]) <= tau_lr
        return src.valid & inb & dst_valid & agree

    return check(d_left, d_right, -1), check(d_right, d_left, +1)


def sad_check(
    left: GrayImage,
    right: GrayImage,
    disp: DisparityMap,
    window: int,
    tau_sad: float,
    view: str = "left",
) -> np.ndarray:
    """Keep pixels whose window SAD at their disparity stays under tau_sad.

    Cheap photometric verification of a matched map against the raw images;
    pixels whose match center is off the other image are dropped.
    """
    ref = left.data if view == "left" else right.data
    other = right.data if view == "left" else left.data
    radius = window // 2
    keep = np.zeros(disp.shape, dtype=bool)
    d_int = np.rint(disp.values).astype(np.int64)
    for d in np.unique(d_int[disp.valid]):
        sel = disp.valid & (d_int == d)
        diff, off = _shifted_abs_diff(ref, other, int(d), view)
        sad = _box_sum(diff, radius)
        keep |= sel & ~off & (sad <= tau_sad)
    return keep
