"""
The full temporal loop: predict, match, fuse
============================================

Over a synthetic dolly sequence the pipeline carries a per-pixel Kalman
state: each frame's disparity belief is warped by ego-motion into the
next frame, the warped belief restricts the matcher's search intervals,
and the new measurement is blended back in.  This script runs the loop
alongside a frame-wise SGM baseline and prints both trajectories.
"""

import os

import numpy as np

from egostereo import StereoRig
from egostereo import kitti_io, metrics, synth
from egostereo.pipeline import PipelineParams, Sequence, run_sequence

out_dir = "demo_out"
os.makedirs(out_dir, exist_ok=True)

rig = StereoRig(f=256.0, b=0.5, cx=127.5, cy=63.5,
                width=256, height=128, d_max=64)
scene = synth.SceneSpec(
    rig=rig,
    primitives=(
        synth.Plane(z=8.0),
        synth.Plane(z=5.0, x0=-2.5, x1=0.3, y0=-1.6, y1=0.5),
        synth.Box(x0=0.35, x1=1.6, y0=-0.3, y1=1.0, z0=3.2, z1=4.0),
    ),
    texture_seed=11,
)

# the camera backs away 0.1 m per frame; odometry is perturbed and the
# images carry additive noise, as real inputs would
frames = synth.make_sequence(
    scene, synth.dolly_trajectory(8, -0.1),
    sigma_rot_deg=0.1, sigma_trans=0.01, seed=1,
)
rng = np.random.default_rng(2)
seq = Sequence(
    rig=rig,
    lefts=[synth.add_image_noise(f.left, 5.0, rng) for f in frames],
    rights=[synth.add_image_noise(f.right, 5.0, rng) for f in frames],
    motions=[f.motion_noisy for f in frames],
)

fused_results = run_sequence(seq, PipelineParams())
base_results = run_sequence(seq, PipelineParams(baseline=True))

print("frame   search   bad(fused)   bad(baseline)")
for k, (fr, br) in enumerate(zip(fused_results, base_results)):
    gt = frames[k].gt_left
    bad_f = metrics.bad_pixel_rate(fr.fused.left, gt, mode="or").rate
    bad_b = metrics.bad_pixel_rate(br.fused.left, gt, mode="or").rate
    print(f"{k:5d}   {fr.search_fraction_left:6.3f}   {bad_f:10.4f}"
          f"   {bad_b:13.4f}")

# frame 0 has no prior state, so both columns start identical; from
# frame 1 the fused estimate searches a fraction of the volume and the
# temporal average starts to beat the per-frame matcher under noise

last = fused_results[-1]
kitti_io.write_disparity_png(os.path.join(out_dir, "fused_last.png"),
                             last.fused.left)
kitti_io.write_color_png(
    os.path.join(out_dir, "fused_last_errors.png"),
    metrics.error_image(last.fused.left, frames[-1].gt_left),
)
print(f"wrote fused_last.png, fused_last_errors.png to {out_dir}/")
