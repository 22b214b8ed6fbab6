"""Synthetic desk-scale scenes with exact ground truth.

A scene script drives parametric human motion (smooth curves, sinusoidal
joint swings), an object that is either welded to a hand joint or orbiting,
point-splat masks, seeded per-channel affine feature maps (so sampling has
a closed-form oracle) and a perturbed copy of the ground-truth human
geometry standing in for an upstream motion estimate.

Everything is bit-deterministic given (script, skeleton): all randomness
flows through per-frame seed sequences derived from the script seed, so
frames of a shorter scene match the prefix of a longer one (the motion
prior's temporal smoothing window is the only cross-frame coupling).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bodymodel import HumanParams, ToySkeleton, fk_transforms, forward_kinematics
from .geometry import Camera, RigidPose, apply_rigid, project_points, rot6d_to_matrix
from .sequence import HoiSequence, stack_sequence

SPLAT_RADIUS = 3
PRIOR_SMOOTH = 5

# sub-seed tags so every random stream is independent
_SEED_FEATURE = 1
_SEED_OCCLUSION = 2
_SEED_PRIOR = 3


def _rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot6d(rot: np.ndarray) -> np.ndarray:
    return np.concatenate([rot[:, 0], rot[:, 1]])


@dataclass
class SceneScript:
    """Declarative description of one synthetic scene."""

    seed: int = 0
    frames: int = 64
    fps: float = 30.0
    camera: dict = field(default_factory=lambda: {
        "fx": 500.0, "fy": 500.0, "cx": 320.0, "cy": 240.0,
        "width": 640, "height": 480})
    # human motion
    start: tuple = (0.0, 0.2, 2.6)
    velocity: tuple = (0.05, 0.0, 0.0)
    sway_amp: float = 0.05
    sway_freq: float = 0.4
    yaw_rate: float = 0.3            # rad/s about +y
    swing_amp: float = 0.35          # rad, sinusoidal joint swings
    swing_freq: float = 0.8
    beta: tuple = (0.0,) * 10
    # object
    attach_joint: int | None = 22    # welded to this joint; None = orbit
    attach_offset: tuple = (0.05, 0.12, 0.02)
    orbit_radius: float = 0.5
    orbit_rate: float = 0.6          # rad/s
    template: dict = field(default_factory=lambda: {
        "rings": 9, "segments": 12, "radii": [0.09, 0.12, 0.09]})
    # rendering / features
    feature_grid: int = 14
    feature_channels: int = 32
    occlusion: list = field(default_factory=list)  # [{start, end, fraction}]
    # motion prior noise
    prior_sigma_rot: float = 0.0
    prior_sigma_trans: float = 0.0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["start"] = list(self.start)
        d["velocity"] = list(self.velocity)
        d["beta"] = list(self.beta)
        d["attach_offset"] = list(self.attach_offset)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneScript":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown scene script fields: {sorted(extra)}")
        return cls(**d)

    def cam(self) -> Camera:
        return Camera.from_dict(self.camera)


def sphere_template(rings: int = 9, segments: int = 12,
                    radii=(0.1, 0.1, 0.1)):
    """Ellipsoid vertex grid with triangle faces; returns (verts, faces)."""
    if rings < 2 or segments < 3:
        raise ValueError(f"template too coarse: rings={rings} segments={segments}")
    rx, ry, rz = radii
    verts = [np.array([0.0, -ry, 0.0])]
    for i in range(1, rings):
        phi = np.pi * i / rings
        for k in range(segments):
            ang = 2.0 * np.pi * k / segments
            verts.append(np.array([rx * np.sin(phi) * np.cos(ang),
                                   -ry * np.cos(phi),
                                   rz * np.sin(phi) * np.sin(ang)]))
    verts.append(np.array([0.0, ry, 0.0]))
    verts = np.asarray(verts)
    faces = []
    for k in range(segments):
        faces.append([0, 1 + k, 1 + (k + 1) % segments])
    for i in range(rings - 2):
        base = 1 + i * segments
        for k in range(segments):
            a = base + k
            b = base + (k + 1) % segments
            faces.append([a, b, b + segments])
            faces.append([a, b + segments, a + segments])
    top = len(verts) - 1
    base = 1 + (rings - 2) * segments
    for k in range(segments):
        faces.append([top, base + (k + 1) % segments, base + k])
    return verts, np.asarray(faces, dtype=np.int64)


def human_params_at(script: SceneScript, t: int) -> HumanParams:
    """Closed-form human parameters for frame t (no randomness)."""
    tt = t / script.fps
    trans = (np.asarray(script.start)
             + np.asarray(script.velocity) * tt
             + np.array([0.0, script.sway_amp * math.sin(2.0 * math.pi
                                                         * script.sway_freq * tt), 0.0]))
    root = _rot6d(_rot_y(script.yaw_rate * tt))
    theta = np.tile(np.array([1.0, 0, 0, 0, 1.0, 0]), (24, 1))
    swing = script.swing_amp * math.sin(2.0 * math.pi * script.swing_freq * tt)
    # legs and arms swing in opposite phase
    for j, sign in ((6, 1.0), (10, -1.0), (15, -1.0), (20, 1.0)):
        theta[j] = _rot6d(_rot_x(sign * swing))
    for j, sign in ((7, -0.5), (11, 0.5), (16, 0.7), (21, -0.7)):
        theta[j] = _rot6d(_rot_x(sign * swing))
    return HumanParams(root6d=root, theta=theta, beta=np.asarray(script.beta),
                       trans=trans)


def object_pose_at(script: SceneScript, t: int, skel: ToySkeleton,
                   params: HumanParams) -> RigidPose:
    """Object pose for frame t: welded to a joint or orbiting the human."""
    tt = t / script.fps
    if script.attach_joint is not None:
        rots, pos = fk_transforms(skel, params)
        j = int(script.attach_joint)
        hand = RigidPose(rotation=rots[j], translation=pos[j])
        offset = RigidPose(rotation=np.eye(3),
                           translation=np.asarray(script.attach_offset))
        return RigidPose(rotation=hand.rotation @ offset.rotation,
                         translation=hand.rotation @ offset.translation
                         + hand.translation)
    center = np.asarray(script.start) + np.asarray(script.velocity) * tt
    ang = script.orbit_rate * tt
    trans = center + script.orbit_radius * np.array([math.cos(ang), -0.1,
                                                     math.sin(ang)])
    return RigidPose(rotation=_rot_y(ang), translation=trans)


def splat_mask(cam: Camera, verts: np.ndarray, height: int, width: int,
               radius: int = SPLAT_RADIUS) -> np.ndarray:
    """Rasterize points as filled disks into a (height, width) mask."""
    uv, valid = project_points(cam, verts)
    mask = np.zeros((height, width), dtype=np.uint8)
    if not valid.any():
        return mask
    cs = np.rint(uv[valid, 0]).astype(np.int64)
    rs = np.rint(uv[valid, 1]).astype(np.int64)
    dy, dx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    disk = (dx * dx + dy * dy) <= radius * radius
    offs = np.stack([dy[disk], dx[disk]], axis=1)
    rr = (rs[:, None] + offs[None, :, 0]).reshape(-1)
    cc = (cs[:, None] + offs[None, :, 1]).reshape(-1)
    keep = (rr >= 0) & (rr < height) & (cc >= 0) & (cc < width)
    mask[rr[keep], cc[keep]] = 255
    return mask


def affine_coefficients(channels: int, seed: int, h: int, w: int) -> np.ndarray:
    """Per-channel (alpha, beta, gamma) for f_c(u, v) = alpha u + beta v + gamma.

    Slopes are scaled by 1/max(h, w) to keep map values within roughly
    [-3, 3], which keeps float32 storage error inside tight oracles.
    """
    rng = np.random.default_rng([seed, _SEED_FEATURE])
    coef = rng.uniform(-1.0, 1.0, size=(channels, 3))
    coef[:, :2] /= max(h, w)
    return coef


def affine_feature_map(h: int, w: int, channels: int, seed: int) -> np.ndarray:
    """Analytic feature grid (h, w, C) float32; linear in cell coordinates.

    The generating coefficients are recoverable via affine_coefficients with
    the same arguments, which is what the sampling oracles use.
    """
    coef = affine_coefficients(channels, seed, h, w)
    uu = np.arange(w, dtype=np.float64)
    vv = np.arange(h, dtype=np.float64)
    data = (coef[:, 0][None, None, :] * uu[None, :, None]
            + coef[:, 1][None, None, :] * vv[:, None, None]
            + coef[:, 2][None, None, :])
    return data.astype(np.float32)


def frame_feature_seed(script_seed: int, frame: int) -> int:
    """Stable per-frame seed for the feature map stream."""
    return script_seed * 1_000_003 + frame


def generate_scene(script: SceneScript, skel: ToySkeleton):
    """Build ground truth for every frame.

    Returns (gt: HoiSequence, masks: (human (N,H,W), object (N,H,W)),
    template (verts, faces)). Occlusion windows delete a seeded fraction of
    object-mask pixels; everything is per-frame deterministic.
    """
    cam = script.cam()
    tverts, tfaces = sphere_template(script.template["rings"],
                                     script.template["segments"],
                                     script.template["radii"])
    n = script.frames
    if n < 1:
        raise ValueError(f"scene needs at least 1 frame, got {n}")
    h, w = cam.height, cam.width
    params_list = []
    poses = []
    human_verts = np.empty((n, len(skel.rest_vertices), 3))
    joints = np.empty((n, skel.n_joints, 3))
    obj_verts = np.empty((n, len(tverts), 3))
    hmasks = np.empty((n, h, w), dtype=np.uint8)
    omasks = np.empty((n, h, w), dtype=np.uint8)
    for t in range(n):
        params = human_params_at(script, t)
        pose = object_pose_at(script, t, skel, params)
        js, vs = forward_kinematics(skel, params)
        ov = apply_rigid(pose, tverts)
        params_list.append(params)
        poses.append(pose)
        human_verts[t] = vs
        joints[t] = js
        obj_verts[t] = ov
        hmasks[t] = splat_mask(cam, vs, h, w)
        om = splat_mask(cam, ov, h, w)
        frac = _occlusion_fraction(script, t)
        if frac > 0.0:
            rng = np.random.default_rng([script.seed, _SEED_OCCLUSION, t])
            rows, cols = np.nonzero(om)
            kill = rng.random(rows.size) < frac
            om[rows[kill], cols[kill]] = 0
        omasks[t] = om
    gt = stack_sequence(params_list, poses, human_verts, obj_verts, joints,
                        script.fps)
    return gt, (hmasks, omasks), (tverts, tfaces)


def _occlusion_fraction(script: SceneScript, t: int) -> float:
    for entry in script.occlusion:
        if int(entry["start"]) <= t < int(entry["end"]):
            return float(entry.get("fraction", 1.0))
    return 0.0


def synthetic_motion_prior(gt: HoiSequence, sigma_rot: float, sigma_trans: float,
                           seed: int):
    """Perturbed copy of the GT human geometry (vertices and joints).

    Per-frame white rotation vectors (applied about the pelvis) and
    translation offsets are box-smoothed over 5 frames and rescaled by
    sqrt(5), so the interior per-component RMS stays at sigma. Zero sigmas
    return the ground truth exactly.
    """
    n = len(gt)
    rng = np.random.default_rng([seed, _SEED_PRIOR])
    rotvec = rng.normal(0.0, 1.0, size=(n, 3)) * sigma_rot
    shift = rng.normal(0.0, 1.0, size=(n, 3)) * sigma_trans
    rotvec = _box_smooth(rotvec) * math.sqrt(PRIOR_SMOOTH)
    shift = _box_smooth(shift) * math.sqrt(PRIOR_SMOOTH)
    verts = gt.human_verts.copy()
    joints = gt.joints.copy()
    for t in range(n):
        rot = _rotvec_matrix(rotvec[t])
        pelvis = gt.joints[t, 0]
        verts[t] = (verts[t] - pelvis) @ rot.T + pelvis + shift[t]
        joints[t] = (joints[t] - pelvis) @ rot.T + pelvis + shift[t]
    return verts, joints


def _box_smooth(x: np.ndarray, width: int = PRIOR_SMOOTH) -> np.ndarray:
    # slice the full convolution by hand: mode="same" pads the *output* to
    # max(len, width), which breaks sequences shorter than the kernel
    kernel = np.ones(width) / width
    lo = (width - 1) // 2
    out = np.empty_like(x)
    for c in range(x.shape[1]):
        out[:, c] = np.convolve(x[:, c], kernel, mode="full")[lo:lo + len(x)]
    return out


def _rotvec_matrix(v: np.ndarray) -> np.ndarray:
    """Rodrigues formula."""
    angle = np.linalg.norm(v)
    if angle < 1e-12:
        return np.eye(3)
    k = v / angle
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + math.sin(angle) * kx + (1.0 - math.cos(angle)) * (kx @ kx)
