"""End-to-end temporal disparity engine and sequence-directory runner.

A DisparityPipeline owns the filter state across frames.  Per frame it
(1) warps the previous fused state into the current views via the ego
motion, (2) derives per-pixel search intervals from the warped variance,
(3) matches both views with interval-restricted SGM, (4) cross-checks the
two maps and verifies photometric consistency, and (5) fuses surviving
measurements with the prediction.  Frame 0 (or baseline mode, or a missing
motion) searches the full disparity range.

Sequence directories follow the KITTI odometry layout:

    calib.txt   P0/P1 projection rows
    poses.txt   world-from-camera 3x4 per frame
    image_0/    left grayscale PNGs   (000000.png, 000001.png, ...)
    image_1/    right grayscale PNGs
    gt_disp_0/  optional left ground-truth disparity PNGs
    gt_disp_1/  optional right ground truth
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import kitti_io, metrics
from .core import (
    DisparityMap,
    FilterState,
    GrayImage,
    StereoRig,
    VarianceMap,
    make_empty_state,
    make_invalid_map,
)
from .fusion import FusionParams, fuse_maps
from .prediction import PredictionParams, fill_zoom_holes, predict_maps
from .sgm import (
    SgmParams,
    aggregate_paths,
    full_range_intervals,
    lr_consistency,
    matching_cost,
    matching_variance_map,
    sad_check,
    search_intervals,
    select_disparity,
)


@dataclass
class FrameResult:
    """Everything the pipeline derived for one frame."""

    frame: int
    predicted_left: DisparityMap
    predicted_left_var: VarianceMap
    predicted_right: DisparityMap
    predicted_right_var: VarianceMap
    intervals_left: object
    intervals_right: object
    measured_left: DisparityMap
    measured_left_var: VarianceMap
    measured_right: DisparityMap
    measured_right_var: VarianceMap
    keep_left: np.ndarray
    keep_right: np.ndarray
    fused: FilterState = None
    search_fraction_left: float = 0.0
    search_fraction_right: float = 0.0


@dataclass
class PipelineParams:
    """Bundle of all stage parameters plus the matching mode."""

    sgm: SgmParams = field(default_factory=SgmParams)
    prediction: PredictionParams = field(default_factory=PredictionParams)
    fusion: FusionParams = field(default_factory=FusionParams)
    baseline: bool = False  # True: full-range SGM every frame, no prediction


def _masked(disp: DisparityMap, keep: np.ndarray) -> DisparityMap:
    valid = disp.valid & keep
    return DisparityMap(np.where(valid, disp.values, 0.0), valid)


class DisparityPipeline:
    """Stateful per-sequence engine; feed frames in order via process_frame."""

    def __init__(self, rig: StereoRig, params: PipelineParams | None = None):
        self.rig = rig
        self.params = params or PipelineParams()
        self.state = make_empty_state(rig, frame=-1)

    def reset(self) -> None:
        self.state = make_empty_state(self.rig, frame=-1)

    def _measure(self, left: GrayImage, right: GrayImage, intervals, view: str):
        cost = matching_cost(left, right, intervals, self.params.sgm, view=view)
        aggregated = aggregate_paths(cost, self.params.sgm)
        disp = select_disparity(aggregated)
        var = matching_variance_map(aggregated, disp, self.params.sgm)
        return disp, var

    def process_frame(
        self, left: GrayImage, right: GrayImage, motion: np.ndarray | None = None
    ) -> FrameResult:
        """Advance the filter by one stereo pair.

        motion is the 4x4 rigid transform taking previous-frame camera
        coordinates to current-frame camera coordinates; pass None on the
        first frame (and whenever ego motion is unknown, which forces a
        full-range search).
        """
        rig = self.rig
        p = self.params
        frame = self.state.frame + 1

        have_state = self.state.left.valid.any() or self.state.right.valid.any()
        if motion is not None and have_state and not p.baseline:
            predicted = predict_maps(self.state, motion, rig, p.prediction)
            pred_l, pred_lv = predicted.left, predicted.left_var
            pred_r, pred_rv = predicted.right, predicted.right_var
            if p.prediction.fill_holes:
                pred_l, pred_lv = fill_zoom_holes(
                    pred_l, pred_lv, p.prediction.gamma_f, p.prediction.q
                )
                pred_r, pred_rv = fill_zoom_holes(
                    pred_r, pred_rv, p.prediction.gamma_f, p.prediction.q
                )
            iv_l = search_intervals(pred_l, pred_lv, rig)
            iv_r = search_intervals(pred_r, pred_rv, rig)
        else:
            pred_l = make_invalid_map(rig.width, rig.height)
            pred_r = make_invalid_map(rig.width, rig.height)
            pred_lv = VarianceMap(np.zeros(rig.shape))
            pred_rv = VarianceMap(np.zeros(rig.shape))
            iv_l = full_range_intervals(rig)
            iv_r = full_range_intervals(rig)

        meas_l, var_l = self._measure(left, right, iv_l, "left")
        meas_r, var_r = self._measure(left, right, iv_r, "right")

        lr_l, lr_r = lr_consistency(meas_l, meas_r, p.sgm.tau_lr)
        keep_l = lr_l & sad_check(left, right, meas_l, p.sgm.window, p.sgm.tau_sad, "left")
        keep_r = lr_r & sad_check(left, right, meas_r, p.sgm.window, p.sgm.tau_sad, "right")
        kept_l = _masked(meas_l, keep_l)
        kept_r = _masked(meas_r, keep_r)

        fused_l, fused_lv = fuse_maps(pred_l, pred_lv, kept_l, var_l, p.fusion)
        fused_r, fused_rv = fuse_maps(pred_r, pred_rv, kept_r, var_r, p.fusion)
        self.state = FilterState(
            left=fused_l, left_var=fused_lv, right=fused_r, right_var=fused_rv,
            frame=frame,
        )
        return FrameResult(
            frame=frame,
            predicted_left=pred_l, predicted_left_var=pred_lv,
            predicted_right=pred_r, predicted_right_var=pred_rv,
            intervals_left=iv_l, intervals_right=iv_r,
            measured_left=meas_l, measured_left_var=var_l,
            measured_right=meas_r, measured_right_var=var_r,
            keep_left=keep_l, keep_right=keep_r,
            fused=self.state,
            search_fraction_left=metrics.search_space_fraction(iv_l),
            search_fraction_right=metrics.search_space_fraction(iv_r),
        )


@dataclass
class Sequence:
    """An in-memory stereo sequence with optional ground truth."""

    rig: StereoRig
    lefts: list
    rights: list
    motions: list  # motions[k]: frame k-1 -> frame k; motions[0] is None
    gt_left: list | None = None
    gt_right: list | None = None

    def __len__(self) -> int:
        return len(self.lefts)


def relative_motions(poses: list[np.ndarray]) -> list:
    """Frame-to-frame motions from world-from-camera poses."""
    motions = [None]
    for prev, curr in zip(poses[:-1], poses[1:]):
        motions.append(np.linalg.inv(curr) @ prev)
    return motions


def _frame_files(directory: str) -> list[str]:
    names = sorted(n for n in os.listdir(directory) if n.endswith(".png"))
    if not names:
        raise kitti_io.FileFormatError(f"{directory}: no PNG frames found")
    return [os.path.join(directory, n) for n in names]


def load_sequence(root: str, d_max: int) -> Sequence:
    """Read a sequence directory (see module docstring for the layout)."""
    calib = kitti_io.read_calib_file(os.path.join(root, "calib.txt"))
    left_files = _frame_files(os.path.join(root, "image_0"))
    right_files = _frame_files(os.path.join(root, "image_1"))
    if len(left_files) != len(right_files):
        raise kitti_io.FileFormatError(
            f"{root}: image_0 has {len(left_files)} frames, image_1 has {len(right_files)}"
        )
    lefts = [kitti_io.read_gray_png(f) for f in left_files]
    rights = [kitti_io.read_gray_png(f) for f in right_files]
    h, w = lefts[0].data.shape
    for img in lefts + rights:
        if img.data.shape != (h, w):
            raise kitti_io.FileFormatError(f"{root}: frame dimensions are not uniform")
    rig = StereoRig(
        f=calib.f, b=calib.b, cx=calib.cx, cy=calib.cy,
        width=w, height=h, d_max=d_max,
    )
    poses = kitti_io.read_pose_file(os.path.join(root, "poses.txt"))
    if len(poses) != len(lefts):
        raise kitti_io.FileFormatError(
            f"{root}: {len(poses)} poses for {len(lefts)} frames"
        )
    seq = Sequence(rig, lefts, rights, relative_motions(poses))

    for attr, sub in (("gt_left", "gt_disp_0"), ("gt_right", "gt_disp_1")):
        gt_dir = os.path.join(root, sub)
        if os.path.isdir(gt_dir):
            files = _frame_files(gt_dir)
            if len(files) != len(lefts):
                raise kitti_io.FileFormatError(
                    f"{root}: {len(files)} maps in {sub} for {len(lefts)} frames"
                )
            setattr(seq, attr, [kitti_io.read_disparity_png(f) for f in files])
    return seq


def run_sequence(
    seq: Sequence,
    params: PipelineParams | None = None,
    out_dir: str | None = None,
    metric_mode: str = "or",
) -> list[FrameResult]:
    """Run the pipeline over a sequence, optionally writing an output tree.

    The output tree holds disp_0/ (left fused disparity PNGs), err_0/
    (error visualizations, when ground truth is available), metrics.txt
    (one line per frame) and summary.txt (aggregate key=value pairs).
    Output content is a pure function of the inputs and parameters.
    """
    params = params or PipelineParams()
    pipeline = DisparityPipeline(seq.rig, params)
    results = []
    lines = []
    for k in range(len(seq)):
        res = pipeline.process_frame(seq.lefts[k], seq.rights[k], seq.motions[k])
        results.append(res)
        entry = {
            "frame": f"{k:06d}",
            "density": f"{metrics.density(res.fused.left):.6f}",
            "search_fraction": f"{res.search_fraction_left:.6f}",
        }
        if seq.gt_left is not None:
            bad = metrics.bad_pixel_rate(res.fused.left, seq.gt_left[k], metric_mode)
            entry["bad_rate"] = f"{bad.rate:.6f}"
            entry["bad_rate_all"] = f"{bad.rate_all:.6f}"
            entry["gt_density"] = f"{bad.density:.6f}"
        lines.append(" ".join(f"{k_}={v}" for k_, v in entry.items()))

    if out_dir is not None:
        disp_dir = kitti_io.ensure_dir(os.path.join(out_dir, "disp_0"))
        for k, res in enumerate(results):
            kitti_io.write_disparity_png(
                os.path.join(disp_dir, f"{k:06d}.png"), res.fused.left
            )
        if seq.gt_left is not None:
            err_dir = kitti_io.ensure_dir(os.path.join(out_dir, "err_0"))
            for k, res in enumerate(results):
                img = metrics.error_image(res.fused.left, seq.gt_left[k], metric_mode)
                kitti_io.write_color_png(os.path.join(err_dir, f"{k:06d}.png"), img)
        with open(os.path.join(out_dir, "metrics.txt"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
        with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
            fh.write(f"frames={len(results)}\n")
            fh.write(f"mode={'baseline' if params.baseline else 'temporal'}\n")
            fh.write(f"metric_mode={metric_mode}\n")
            mean_sf = float(np.mean([r.search_fraction_left for r in results]))
            fh.write(f"mean_search_fraction={mean_sf:.6f}\n")
            mean_density = float(
                np.mean([metrics.density(r.fused.left) for r in results])
            )
            fh.write(f"mean_density={mean_density:.6f}\n")
            if seq.gt_left is not None:
                rates = [
                    metrics.bad_pixel_rate(r.fused.left, seq.gt_left[k], metric_mode).rate
                    for k, r in enumerate(results)
                ]
                fh.write(f"mean_bad_rate={float(np.mean(rates)):.6f}\n")
    return results


def write_sequence(root: str, seq: Sequence, poses: list[np.ndarray]) -> None:
    """Materialize an in-memory sequence as a KITTI-layout directory."""
    kitti_io.ensure_dir(root)
    calib = kitti_io.CalibData(f=seq.rig.f, cx=seq.rig.cx, cy=seq.rig.cy, b=seq.rig.b)
    kitti_io.write_calib_file(os.path.join(root, "calib.txt"), calib)
    kitti_io.write_pose_file(os.path.join(root, "poses.txt"), poses)
    for sub, images in (("image_0", seq.lefts), ("image_1", seq.rights)):
        d = kitti_io.ensure_dir(os.path.join(root, sub))
        for k, img in enumerate(images):
            kitti_io.write_gray_png(os.path.join(d, f"{k:06d}.png"), img)
    for sub, maps in (("gt_disp_0", seq.gt_left), ("gt_disp_1", seq.gt_right)):
        if maps is None:
            continue
        d = kitti_io.ensure_dir(os.path.join(root, sub))
        for k, m in enumerate(maps):
            kitti_io.write_disparity_png(os.path.join(d, f"{k:06d}.png"), m)
