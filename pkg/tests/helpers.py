"""Shared builders for the test suite: rigs, scenes, rendered sequences."""

from __future__ import annotations

import numpy as np

from egostereo import StereoRig
from egostereo import synth


def make_rig(width=256, height=128, f=256.0, b=0.5, d_max=64) -> StereoRig:
    return StereoRig(
        f=f, b=b, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0,
        width=width, height=height, d_max=d_max,
    )


def rich_scene(rig: StereoRig, texture_seed: int = 7) -> synth.SceneSpec:
    """Background wall at 8 m, offset panel at 5 m, near box at ~3.5 m."""
    return synth.SceneSpec(
        rig=rig,
        primitives=(
            synth.Plane(z=8.0),
            synth.Plane(z=5.0, x0=-2.5, x1=0.3, y0=-1.6, y1=0.5),
            synth.Box(x0=0.35, x1=1.6, y0=-0.3, y1=1.0, z0=3.2, z1=4.0),
        ),
        texture_seed=texture_seed,
    )


def small_scene(rig: StereoRig, texture_seed: int = 0) -> synth.SceneSpec:
    """Scene scaled for tiny rigs (32x32, f=64, fb=32): disparities 8..15."""
    return synth.SceneSpec(
        rig=rig,
        primitives=(
            synth.Plane(z=4.0),
            synth.Plane(z=3.0, x0=-0.8, x1=0.1, y0=-0.6, y1=0.2),
            synth.Box(x0=0.05, x1=0.6, y0=-0.1, y1=0.5, z0=2.2, z1=2.7),
        ),
        texture_seed=texture_seed,
    )


def recede_sequence(
    rig: StereoRig,
    n_frames: int,
    step: float = 0.1,
    texture_seed: int = 7,
    sigma_rot_deg: float = 0.0,
    sigma_trans: float = 0.0,
    seed: int = 0,
):
    """Dolly-out sequence: the camera backs away along its optical axis.

    Backing away shrinks disparities frame over frame, so the unmatchable
    left-image strip (x < d) and occlusion bands shrink too; this isolates
    the interval-contraction behavior the search-space tests measure.
    """
    scene = rich_scene(rig, texture_seed)
    trajectory = synth.dolly_trajectory(n_frames, -abs(step))
    return synth.make_sequence(
        scene, trajectory, sigma_rot_deg=sigma_rot_deg,
        sigma_trans=sigma_trans, seed=seed,
    )


def noisy_images(frames, sigma: float, seed: int):
    """Per-frame left/right images with additive intensity noise."""
    rng = np.random.default_rng(seed)
    lefts = [synth.add_image_noise(fr.left, sigma, rng) for fr in frames]
    rights = [synth.add_image_noise(fr.right, sigma, rng) for fr in frames]
    return lefts, rights
