"""Deterministic synthetic stereo scenes with exact ground truth.

Renders static scenes of fronto-parallel textured planes and axis-aligned
boxes by per-pixel ray casting, giving bit-reproducible image pairs, exact
disparity maps, and exact camera poses.  Serves as the reference data source
for end-to-end validation where real captures would leave ground truth
unknown.

World frame = camera frame of an untransformed pose (x right, y down,
z forward).  Poses are world-from-camera transforms; the relative motion
between consecutive poses maps previous-frame coordinates into the current
frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .core import DisparityMap, GrayImage, StereoRig, make_motion, validate_rigid_motion

_RAY_EPS = 1e-6


@dataclass(frozen=True)
class Plane:
    """Fronto-parallel plane at world depth z, optionally bounded in x/y.

    Bounds are world-coordinate intervals; None means unbounded.
    """

    z: float
    x0: float | None = None
    x1: float | None = None
    y0: float | None = None
    y1: float | None = None


@dataclass(frozen=True)
class Box:
    """Axis-aligned box spanning [x0,x1] x [y0,y1] x [z0,z1] in world space."""

    x0: float
    x1: float
    y0: float
    y1: float
    z0: float
    z1: float


@dataclass
class SceneSpec:
    """Static scene: primitives, a texture seed, and the observing rig.

    texture_scale is the world-space lattice spacing of the procedural
    texture in meters.  If omitted it is derived from the deepest primitive
    so the texture period stays >= ~2.5 px on screen, keeping window-based
    matching well posed (finer texture would alias under point sampling).
    """

    rig: StereoRig
    primitives: list = field(default_factory=list)
    texture_seed: int = 0
    texture_scale: float | None = None
    background: int = 12

    def __post_init__(self):
        self.primitives = tuple(self.primitives)
        for p in self.primitives:
            depth = p.z if isinstance(p, Plane) else p.z0
            if depth <= self.rig.b:
                raise ValueError(
                    f"primitive depth {depth} must exceed the baseline {self.rig.b}"
                )
        if self.texture_scale is None:
            zmax = max(
                (p.z if isinstance(p, Plane) else p.z1) for p in self.primitives
            )
            self.texture_scale = 2.5 * zmax / self.rig.f

    def max_depth(self) -> float:
        return max((p.z if isinstance(p, Plane) else p.z1) for p in self.primitives)


def _hash_lattice(ix, iy, iz, seed: int):
    """Deterministic integer-lattice hash -> float64 in [0, 1).

    Pure uint64 arithmetic (splitmix64-style finalizer), so results are
    identical across runs and platforms.
    """
    with np.errstate(over="ignore"):
        h = ix.astype(np.int64).view(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
        h ^= iy.astype(np.int64).view(np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F)
        h ^= iz.astype(np.int64).view(np.uint64) * np.uint64(0x165667B19E3779F9)
        h ^= np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * np.uint64(0x27D4EB2F165667C5)
        h ^= h >> np.uint64(30)
        h *= np.uint64(0xBF58476D1CE4E5B9)
        h ^= h >> np.uint64(27)
        h *= np.uint64(0x94D049BB133111EB)
        h ^= h >> np.uint64(31)
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def _value_noise(p: np.ndarray, seed: int) -> np.ndarray:
    """Trilinear value noise over a unit lattice; p is (..., 3)."""
    base = np.floor(p)
    frac = p - base
    frac = frac * frac * (3.0 - 2.0 * frac)
    base = base.astype(np.int64)
    out = np.zeros(p.shape[:-1])
    for corner in range(8):
        ox, oy, oz = corner & 1, (corner >> 1) & 1, (corner >> 2) & 1
        h = _hash_lattice(base[..., 0] + ox, base[..., 1] + oy, base[..., 2] + oz, seed)
        wx = frac[..., 0] if ox else 1.0 - frac[..., 0]
        wy = frac[..., 1] if oy else 1.0 - frac[..., 1]
        wz = frac[..., 2] if oz else 1.0 - frac[..., 2]
        out += h * wx * wy * wz
    return out


def _texture(points: np.ndarray, scale: float, seed: int) -> np.ndarray:
    """Two-octave procedural intensity in [20, 235] at world points (..., 3)."""
    q = points / scale
    v = 0.65 * _value_noise(q, seed) + 0.35 * _value_noise(2.0 * q, seed + 1)
    return 20.0 + 215.0 * np.clip(v, 0.0, 1.0)


def _slab(c: float, d: np.ndarray, lo: float, hi: float):
    """Entry/exit ray parameters for one axis-aligned slab."""
    with np.errstate(divide="ignore"):
        inv = np.where(d != 0.0, 1.0 / d, np.inf)
    t1 = (lo - c) * inv
    t2 = (hi - c) * inv
    tmin = np.minimum(t1, t2)
    tmax = np.maximum(t1, t2)
    parallel = d == 0.0
    inside = (c >= lo) & (c <= hi)
    tmin = np.where(parallel, np.where(inside, -np.inf, np.inf), tmin)
    tmax = np.where(parallel, np.where(inside, np.inf, -np.inf), tmax)
    return tmin, tmax


def _intersect(primitive, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Ray parameter of the nearest hit with one primitive (inf on miss)."""
    if isinstance(primitive, Plane):
        dz = dirs[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (primitive.z - origin[2]) / dz
        t = np.where(np.abs(dz) < 1e-15, np.inf, t)
        px = origin[0] + t * dirs[..., 0]
        py = origin[1] + t * dirs[..., 1]
        ok = t > _RAY_EPS
        if primitive.x0 is not None:
            ok &= px >= primitive.x0
        if primitive.x1 is not None:
            ok &= px <= primitive.x1
        if primitive.y0 is not None:
            ok &= py >= primitive.y0
        if primitive.y1 is not None:
            ok &= py <= primitive.y1
        return np.where(ok, t, np.inf)
    tminx, tmaxx = _slab(origin[0], dirs[..., 0], primitive.x0, primitive.x1)
    tminy, tmaxy = _slab(origin[1], dirs[..., 1], primitive.y0, primitive.y1)
    tminz, tmaxz = _slab(origin[2], dirs[..., 2], primitive.z0, primitive.z1)
    tnear = np.maximum(np.maximum(tminx, tminy), tminz)
    tfar = np.minimum(np.minimum(tmaxx, tmaxy), tmaxz)
    ok = (tnear <= tfar) & (tnear > _RAY_EPS)
    return np.where(ok, tnear, np.inf)


def _render_view(scene: SceneSpec, center: np.ndarray, R: np.ndarray):
    """Ray-cast one camera; returns (intensity, depth, hit-mask)."""
    rig = scene.rig
    ys, xs = np.mgrid[0 : rig.height, 0 : rig.width]
    dir_cam = np.stack(
        [(xs - rig.cx) / rig.f, (ys - rig.cy) / rig.f, np.ones_like(xs, dtype=np.float64)],
        axis=-1,
    )
    dirs = dir_cam @ R.T
    t_best = np.full(rig.shape, np.inf)
    for prim in scene.primitives:
        t_best = np.minimum(t_best, _intersect(prim, center, dirs))
    hit = np.isfinite(t_best)
    # dir_cam has unit z, so the ray parameter equals camera-frame depth
    depth = np.where(hit, t_best, np.inf)
    points = center + np.where(hit, t_best, 0.0)[..., None] * dirs
    tex = _texture(points, scene.texture_scale, scene.texture_seed)
    intensity = np.where(hit, tex, float(scene.background))
    intensity = np.clip(np.rint(intensity), 0, 255).astype(np.uint8)
    return intensity, depth, hit


def render_frame(scene: SceneSpec, pose: np.ndarray):
    """Render a stereo pair plus exact disparity maps for one pose.

    pose is the world-from-camera transform of the left camera; the right
    camera sits at baseline offset +b along the rig's x axis.  Ground-truth
    disparity is f*b/Z from the nearest hit; pixels with no hit, or closer
    than d_max allows, are invalid.
    """
    pose = validate_rigid_motion(pose)
    rig = scene.rig
    R = pose[:3, :3]
    c_left = pose[:3, 3]
    c_right = c_left + R @ np.array([rig.b, 0.0, 0.0])

    maps = []
    images = []
    for center in (c_left, c_right):
        intensity, depth, hit = _render_view(scene, center, R)
        with np.errstate(divide="ignore"):
            disp = np.where(hit, rig.fb / depth, 0.0)
        valid = hit & (disp <= rig.d_max)
        maps.append(DisparityMap(np.where(valid, disp, 0.0), valid))
        images.append(GrayImage(intensity))
    return images[0], images[1], maps[0], maps[1]


@dataclass(eq=False)
class SequenceFrame:
    """One rendered frame of a sequence with exact and perturbed motion.

    motion_exact / motion_noisy map previous-frame camera coordinates into
    this frame; both are None for the first frame.
    """

    left: GrayImage
    right: GrayImage
    gt_left: DisparityMap
    gt_right: DisparityMap
    pose: np.ndarray
    motion_exact: np.ndarray | None
    motion_noisy: np.ndarray | None


def relative_motion(pose_prev: np.ndarray, pose_curr: np.ndarray) -> np.ndarray:
    """Motion taking previous-frame camera coordinates into the current frame."""
    return np.linalg.inv(pose_curr) @ pose_prev


def perturb_motion(T: np.ndarray, sigma_rot_deg: float, sigma_trans: float, rng) -> np.ndarray:
    """Left-compose T with seeded small rotation/translation noise."""
    if sigma_rot_deg == 0.0 and sigma_trans == 0.0:
        return T.copy()
    rotvec = rng.normal(0.0, np.deg2rad(sigma_rot_deg), 3)
    tvec = rng.normal(0.0, sigma_trans, 3)
    noise = make_motion(Rotation.from_rotvec(rotvec).as_matrix(), tvec)
    return noise @ T


def make_sequence(
    scene: SceneSpec,
    trajectory,
    sigma_rot_deg: float = 0.0,
    sigma_trans: float = 0.0,
    seed: int = 0,
) -> list[SequenceFrame]:
    """Render a trajectory, pairing exact relative motions with noisy copies.

    The perturbed motions emulate an imperfect odometry source; with both
    sigmas zero they equal the exact ones.
    """
    rng = np.random.default_rng(seed)
    frames = []
    prev_pose = None
    for pose in trajectory:
        pose = validate_rigid_motion(pose)
        left, right, gt_l, gt_r = render_frame(scene, pose)
        if prev_pose is None:
            exact = noisy = None
        else:
            exact = relative_motion(prev_pose, pose)
            noisy = perturb_motion(exact, sigma_rot_deg, sigma_trans, rng)
        frames.append(SequenceFrame(left, right, gt_l, gt_r, pose, exact, noisy))
        prev_pose = pose
    return frames


def dolly_trajectory(n_frames: int, step: float) -> list[np.ndarray]:
    """Poses of a camera advancing `step` meters per frame along +z."""
    return [make_motion(t=(0.0, 0.0, k * step)) for k in range(n_frames)]


def add_image_noise(image: GrayImage, sigma: float, rng) -> GrayImage:
    """Additive Gaussian intensity noise, clipped and requantized to uint8."""
    if sigma == 0.0:
        return GrayImage(image.data.copy())
    noisy = image.data.astype(np.float64) + rng.normal(0.0, sigma, image.data.shape)
    return GrayImage(np.clip(np.rint(noisy), 0, 255).astype(np.uint8))


# --- plain-text scene serialization -------------------------------------

def _format_range(lo, hi) -> str:
    return f"{lo!r}:{hi!r}"


def write_scene_file(scene: SceneSpec, path) -> None:
    """Serialize a scene as the key=value text format read by parse_scene_file."""
    rig = scene.rig
    lines = [
        "# synthetic scene description",
        f"f = {rig.f!r}",
        f"b = {rig.b!r}",
        f"cx = {rig.cx!r}",
        f"cy = {rig.cy!r}",
        f"width = {rig.width}",
        f"height = {rig.height}",
        f"d_max = {rig.d_max}",
        f"texture_seed = {scene.texture_seed}",
        f"texture_scale = {scene.texture_scale!r}",
        f"background = {scene.background}",
    ]
    for p in scene.primitives:
        if isinstance(p, Plane):
            parts = [f"z={p.z!r}"]
            if p.x0 is not None or p.x1 is not None:
                parts.append(f"x={_format_range(p.x0, p.x1)}")
            if p.y0 is not None or p.y1 is not None:
                parts.append(f"y={_format_range(p.y0, p.y1)}")
            lines.append("plane = " + " ".join(parts))
        else:
            lines.append(
                "box = "
                f"x={_format_range(p.x0, p.x1)} "
                f"y={_format_range(p.y0, p.y1)} "
                f"z={_format_range(p.z0, p.z1)}"
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_primitive(kind: str, rest: str):
    fields = {}
    for token in rest.split():
        key, _, val = token.partition("=")
        if ":" in val:
            lo, hi = val.split(":")
            fields[key] = (float(lo), float(hi))
        else:
            fields[key] = float(val)
    if kind == "plane":
        x = fields.get("x", (None, None))
        y = fields.get("y", (None, None))
        return Plane(z=fields["z"], x0=x[0], x1=x[1], y0=y[0], y1=y[1])
    x, y, z = fields["x"], fields["y"], fields["z"]
    return Box(x0=x[0], x1=x[1], y0=y[0], y1=y[1], z0=z[0], z1=z[1])


def parse_scene_file(path) -> SceneSpec:
    """Read a scene spec from the plain-text key=value format."""
    keys = {}
    primitives = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key = key.strip()
            value = value.strip()
            if key in ("plane", "box"):
                primitives.append(_parse_primitive(key, value))
            else:
                keys[key] = value
    try:
        rig = StereoRig(
            f=float(keys["f"]),
            b=float(keys["b"]),
            cx=float(keys["cx"]),
            cy=float(keys["cy"]),
            width=int(keys["width"]),
            height=int(keys["height"]),
            d_max=int(keys["d_max"]),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing rig key {exc}") from exc
    scale = keys.get("texture_scale")
    return SceneSpec(
        rig=rig,
        primitives=primitives,
        texture_seed=int(keys.get("texture_seed", 0)),
        texture_scale=float(scale) if scale is not None else None,
        background=int(keys.get("background", 12)),
    )
