"""Command-line front end.

Subcommands:
    run            process a sequence directory into a disparity output tree
    synth          generate a synthetic stereo sequence with ground truth
    eval           score a disparity directory against ground truth
    render-errors  write red/blue error visualizations

Numeric parameters can come from a config file of key=value lines (# starts
a comment); command-line flags override file values.  All outputs are a
pure function of inputs, parameters and seeds.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import kitti_io, metrics, synth
from .core import StereoRig
from .fusion import FusionParams
from .pipeline import PipelineParams, Sequence, load_sequence, run_sequence, write_sequence
from .prediction import PredictionParams
from .sgm import SgmParams

_PARAM_KEYS = {
    "q": float, "gamma_f": float, "gamma_e": float, "edge_window": int,
    "window": int, "p1": float, "p2": float, "s_max": float, "r_min": float,
    "tau_lr": float, "tau_sad": float, "p_init": float,
    "d_max": int, "metric_mode": str,
}


def read_config(path: str) -> dict:
    """Parse key=value lines; unknown keys are an error, not a warning."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep or not key or not val:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            if key not in _PARAM_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown parameter {key!r}")
            try:
                values[key] = _PARAM_KEYS[key](val)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {val!r}") from None
    return values


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value parameter file")
    group = parser.add_argument_group("parameters (override config file)")
    for key, typ in _PARAM_KEYS.items():
        if key == "metric_mode":
            group.add_argument("--metric-mode", choices=("or", "and"), default=None)
        else:
            group.add_argument(f"--{key.replace('_', '-')}", type=typ, default=None)


def gather_params(args: argparse.Namespace) -> dict:
    """Merge config file and flags into one parameter dict."""
    values = read_config(args.config) if getattr(args, "config", None) else {}
    for key in _PARAM_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return values


def build_params(values: dict, baseline: bool = False) -> PipelineParams:
    sgm_kwargs = {
        k: values[k] for k in ("window", "p1", "p2", "s_max", "r_min", "tau_lr", "tau_sad")
        if k in values
    }
    pred_kwargs = {
        k: values[k] for k in ("q", "gamma_f", "gamma_e", "edge_window") if k in values
    }
    fusion_kwargs = {k: values[k] for k in ("p_init",) if k in values}
    return PipelineParams(
        sgm=SgmParams(**sgm_kwargs),
        prediction=PredictionParams(**pred_kwargs),
        fusion=FusionParams(**fusion_kwargs),
        baseline=baseline,
    )


def cmd_run(args: argparse.Namespace) -> int:
    values = gather_params(args)
    params = build_params(values, baseline=args.baseline_sgm)
    d_max = values.get("d_max", 64)
    metric_mode = values.get("metric_mode", "or")
    seq = load_sequence(args.sequence, d_max=d_max)
    results = run_sequence(seq, params, out_dir=args.out, metric_mode=metric_mode)
    for k, res in enumerate(results):
        line = (
            f"frame {k:06d}: density={metrics.density(res.fused.left):.3f} "
            f"search_fraction={res.search_fraction_left:.3f}"
        )
        if seq.gt_left is not None:
            bad = metrics.bad_pixel_rate(res.fused.left, seq.gt_left[k], metric_mode)
            line += f" bad_rate={bad.rate:.4f}"
        print(line)
    print(f"wrote {args.out}")
    return 0


def _default_scene(rig: StereoRig) -> synth.SceneSpec:
    """A background wall, an offset mid-depth panel and a near box."""
    return synth.SceneSpec(
        rig=rig,
        primitives=(
            synth.Plane(z=8.0),
            synth.Plane(z=5.0, x0=-2.5, x1=0.3, y0=-1.6, y1=0.5),
            synth.Box(x0=0.35, x1=1.6, y0=-0.3, y1=1.0, z0=3.2, z1=4.0),
        ),
        texture_seed=7,
    )


def cmd_synth(args: argparse.Namespace) -> int:
    rig = StereoRig(
        f=args.f, b=args.baseline, cx=(args.width - 1) / 2.0,
        cy=(args.height - 1) / 2.0, width=args.width, height=args.height,
        d_max=args.d_max,
    )
    if args.scene:
        scene = synth.parse_scene_file(args.scene, rig)
    else:
        scene = _default_scene(rig)
    trajectory = synth.dolly_trajectory(args.frames, args.step)
    frames = synth.make_sequence(
        scene, trajectory,
        sigma_rot_deg=args.pose_noise_rot, sigma_trans=args.pose_noise_trans,
        seed=args.seed,
    )
    rng = np.random.default_rng(args.seed + 1)
    lefts, rights = [], []
    for fr in frames:
        lefts.append(synth.add_image_noise(fr.left, args.noise_sigma, rng))
        rights.append(synth.add_image_noise(fr.right, args.noise_sigma, rng))

    # poses.txt carries the noisy odometry; ground truth stays exact, which
    # reproduces the usual situation of imperfect ego-motion estimates.
    poses = [frames[0].pose]
    for fr in frames[1:]:
        poses.append(poses[-1] @ np.linalg.inv(fr.motion_noisy))
    seq = Sequence(
        rig, lefts, rights, motions=[None] * len(frames),
        gt_left=[fr.gt_left for fr in frames],
        gt_right=[fr.gt_right for fr in frames],
    )
    write_sequence(args.out, seq, poses)
    print(f"wrote {len(frames)} frames to {args.out}")
    return 0


def _load_disp_dir(path: str):
    names = sorted(n for n in os.listdir(path) if n.endswith(".png"))
    if not names:
        raise kitti_io.FileFormatError(f"{path}: no PNG maps found")
    return names, [kitti_io.read_disparity_png(os.path.join(path, n)) for n in names]


def _paired_maps(est_dir: str, gt_dir: str):
    est_names, est_maps = _load_disp_dir(est_dir)
    gt_names, gt_maps = _load_disp_dir(gt_dir)
    if est_names != gt_names:
        raise kitti_io.FileFormatError(
            f"estimate and ground-truth directories hold different frames"
        )
    return est_names, est_maps, gt_maps


def cmd_eval(args: argparse.Namespace) -> int:
    names, est_maps, gt_maps = _paired_maps(args.estimate, args.truth)
    rates = []
    for name, est, gt in zip(names, est_maps, gt_maps):
        bad = metrics.bad_pixel_rate(est, gt, args.mode)
        rates.append(bad.rate)
        print(
            f"{name}: bad_rate={bad.rate:.6f} bad_rate_all={bad.rate_all:.6f} "
            f"density={bad.density:.6f}"
        )
    print(f"mean: bad_rate={float(np.mean(rates)):.6f} frames={len(rates)}")
    return 0


def cmd_render_errors(args: argparse.Namespace) -> int:
    names, est_maps, gt_maps = _paired_maps(args.estimate, args.truth)
    kitti_io.ensure_dir(args.out)
    for name, est, gt in zip(names, est_maps, gt_maps):
        img = metrics.error_image(est, gt, args.mode)
        kitti_io.write_color_png(os.path.join(args.out, name), img)
    print(f"wrote {len(names)} error images to {args.out}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egostereo",
        description="Temporal stereo disparity estimation with ego-motion "
        "prediction, reduced-range semi-global matching and Kalman fusion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="process a sequence directory")
    p_run.add_argument("sequence", help="KITTI-layout sequence directory")
    p_run.add_argument("-o", "--out", required=True, help="output directory")
    p_run.add_argument(
        "--baseline-sgm", action="store_true",
        help="full-range SGM on every frame (no prediction, no fusion carry-over)",
    )
    _add_param_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_synth = sub.add_parser("synth", help="generate a synthetic sequence")
    p_synth.add_argument("out", help="sequence directory to create")
    p_synth.add_argument("--scene", help="scene description file")
    p_synth.add_argument("--frames", type=int, default=10)
    p_synth.add_argument("--step", type=float, default=0.1, help="dolly step (m/frame)")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--noise-sigma", type=float, default=0.0,
                         help="additive intensity noise sigma")
    p_synth.add_argument("--pose-noise-trans", type=float, default=0.0,
                         help="odometry translation noise sigma (m)")
    p_synth.add_argument("--pose-noise-rot", type=float, default=0.0,
                         help="odometry rotation noise sigma (degrees)")
    p_synth.add_argument("--width", type=int, default=256)
    p_synth.add_argument("--height", type=int, default=128)
    p_synth.add_argument("--f", type=float, default=256.0)
    p_synth.add_argument("--baseline", type=float, default=0.5, help="stereo baseline (m)")
    p_synth.add_argument("--d-max", type=int, default=64)
    p_synth.set_defaults(func=cmd_synth)

    p_eval = sub.add_parser("eval", help="score disparity maps against ground truth")
    p_eval.add_argument("estimate", help="directory of estimated disparity PNGs")
    p_eval.add_argument("truth", help="directory of ground-truth disparity PNGs")
    p_eval.add_argument("--mode", choices=("or", "and"), default="or")
    p_eval.set_defaults(func=cmd_eval)

    p_err = sub.add_parser("render-errors", help="write error visualizations")
    p_err.add_argument("estimate")
    p_err.add_argument("truth")
    p_err.add_argument("out")
    p_err.add_argument("--mode", choices=("or", "and"), default="or")
    p_err.set_defaults(func=cmd_render_errors)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
