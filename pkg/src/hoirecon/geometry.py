"""Cameras, rigid poses and the 6D rotation parameterization.

All math here is float64. The camera is a pinhole at the world origin with
identity extrinsics (camera frame == world frame); image coordinates follow
the cell-center convention with the origin at the top-left pixel.
"""

from dataclasses import dataclass, field

import numpy as np


class DegenerateInputError(ValueError):
    """Input is numerically degenerate (depth, 6D vector, alignment rank)."""


MIN_DEPTH = 1e-6


@dataclass(frozen=True)
class Camera:
    """Pinhole intrinsics plus image size."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive: fx={self.fx} fy={self.fy}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image size must be positive: {self.width}x{self.height}")

    def to_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d: dict) -> "Camera":
        return cls(fx=float(d["fx"]), fy=float(d["fy"]), cx=float(d["cx"]),
                   cy=float(d["cy"]), width=int(d["width"]), height=int(d["height"]))


@dataclass
class RigidPose:
    """Rotation (3, 3) plus translation (3,); rotation must be orthonormal."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        err = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if err > 1e-5:
            raise ValueError(f"rotation is not orthonormal (|R^T R - I|_inf = {err:.2e})")

    @classmethod
    def identity(cls) -> "RigidPose":
        return cls()

    def to_dict(self) -> dict:
        return {"R": [float(x) for x in self.rotation.reshape(-1)],
                "T": [float(x) for x in self.translation]}

    @classmethod
    def from_dict(cls, d: dict) -> "RigidPose":
        return cls(rotation=np.asarray(d["R"], dtype=np.float64).reshape(3, 3),
                   translation=np.asarray(d["T"], dtype=np.float64))


def pose_compose(outer: RigidPose, inner: RigidPose) -> RigidPose:
    """outer after inner: x -> R_o (R_i x + T_i) + T_o."""
    return RigidPose(rotation=outer.rotation @ inner.rotation,
                     translation=outer.rotation @ inner.translation + outer.translation)


def pose_inverse(pose: RigidPose) -> RigidPose:
    rt = pose.rotation.T
    return RigidPose(rotation=rt, translation=-rt @ pose.translation)


def apply_rigid(pose: RigidPose, points: np.ndarray) -> np.ndarray:
    """Apply a rigid pose to (N, 3) points."""
    pts = np.asarray(points, dtype=np.float64)
    return pts @ pose.rotation.T + pose.translation


def project_point(cam: Camera, point) -> tuple:
    """Pinhole projection of one 3-D point to pixel coordinates (u, v)."""
    x, y, z = np.asarray(point, dtype=np.float64)
    if z <= MIN_DEPTH:
        raise DegenerateInputError(f"point depth {z:.3e} <= {MIN_DEPTH:.0e}, cannot project")
    return cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy


def project_points(cam: Camera, points: np.ndarray):
    """Batched projection; returns (uv (N, 2), valid (N,) bool).

    Points at or behind the near plane are flagged invalid, their uv is 0.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    valid = pts[:, 2] > MIN_DEPTH
    z = np.where(valid, pts[:, 2], 1.0)
    uv = np.zeros((len(pts), 2), dtype=np.float64)
    uv[:, 0] = np.where(valid, cam.fx * pts[:, 0] / z + cam.cx, 0.0)
    uv[:, 1] = np.where(valid, cam.fy * pts[:, 1] / z + cam.cy, 0.0)
    return uv, valid


def crop_intrinsics(cam: Camera, top_left, side: float, target_size: int) -> Camera:
    """Intrinsics after cropping a square box and resizing it to target_size.

    The box has its top-left corner at ``top_left`` (pixel coordinates) and
    side length ``side``; pixel p maps to (p - top_left) * target_size / side.
    """
    if side <= 0:
        raise ValueError(f"crop side must be positive, got {side}")
    s = target_size / float(side)
    tx, ty = float(top_left[0]), float(top_left[1])
    return Camera(fx=cam.fx * s, fy=cam.fy * s,
                  cx=(cam.cx - tx) * s, cy=(cam.cy - ty) * s,
                  width=target_size, height=target_size)


# ---------------------------------------------------------------------------
# 6D rotation representation: first two columns of the rotation matrix
# ---------------------------------------------------------------------------

IDENTITY_6D = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])


def rot6d_to_matrix(r6d: np.ndarray) -> np.ndarray:
    """Gram-Schmidt a 6-vector (two stacked 3-vectors) into a rotation."""
    r = np.asarray(r6d, dtype=np.float64).reshape(6)
    a1, a2 = r[:3], r[3:]
    n1 = np.linalg.norm(a1)
    if n1 < 1e-8:
        raise DegenerateInputError(f"first 6D column has norm {n1:.3e}")
    c1 = a1 / n1
    u = a2 - (c1 @ a2) * c1
    n2 = np.linalg.norm(u)
    if n2 < 1e-8:
        raise DegenerateInputError(f"6D columns are collinear (residual norm {n2:.3e})")
    c2 = u / n2
    c3 = np.cross(c1, c2)
    return np.stack([c1, c2, c3], axis=1)


def matrix_to_rot6d(rot: np.ndarray) -> np.ndarray:
    """First two columns of a rotation matrix, flattened to 6 floats."""
    rot = np.asarray(rot, dtype=np.float64).reshape(3, 3)
    err = np.abs(rot.T @ rot - np.eye(3)).max()
    if err > 1e-3:
        raise ValueError(f"matrix is not a rotation (|R^T R - I|_inf = {err:.2e})")
    return np.concatenate([rot[:, 0], rot[:, 1]])


def geodesic_angle(ra: np.ndarray, rb: np.ndarray) -> float:
    """Angle of the relative rotation between two rotation matrices, radians."""
    ra = np.asarray(ra, dtype=np.float64)
    rb = np.asarray(rb, dtype=np.float64)
    c = (np.trace(ra.T @ rb) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def umeyama_align(src: np.ndarray, dst: np.ndarray) -> RigidPose:
    """Least-squares rigid pose (no scale) with R @ src + T ~= dst.

    Kabsch via SVD of the cross-covariance with the usual reflection fix.
    Raises DegenerateInputError when the point sets are rank-deficient
    (all collinear) and the rotation is not unique.
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 3)
    if src.shape != dst.shape:
        raise ValueError(f"point sets differ in shape: {src.shape} vs {dst.shape}")
    if len(src) < 3:
        raise ValueError(f"need at least 3 correspondences, got {len(src)}")
    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    sc = src - mu_s
    dc = dst - mu_d
    cov = sc.T @ dc / len(src)
    u, sing, vt = np.linalg.svd(cov)
    scale = max(sing[0], np.finfo(np.float64).tiny)
    if sing[1] / scale < 1e-9:
        raise DegenerateInputError(
            f"cross-covariance is rank-deficient (singular values {sing})")
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return RigidPose(rotation=rot, translation=mu_d - rot @ mu_s)
