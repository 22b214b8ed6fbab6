"""3D vertex encoder: lift per-vertex image features from the crop.

Vertices are projected into the crop, divided by the feature stride and
bilinearly sampled; sampled features are concatenated with the vertex
coordinates. The object pose is initialized from mask-pooled features by a
small MLP, relative to a pelvis-centered human frame.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import MIN_DEPTH, Camera, RigidPose, pose_compose, rot6d_to_matrix
from .numerics import MlpWeights, mlp_forward

MAX_OBJECT_VERTS = 1024


@dataclass
class FeatureMap:
    """Backbone feature grid covering one square crop."""

    data: np.ndarray   # (h, w, C) float32
    stride: float      # crop pixels per feature cell

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 3:
            raise ValueError(f"feature map must be (h, w, C), got {self.data.shape}")
        if self.stride <= 0:
            raise ValueError(f"stride must be positive, got {self.stride}")

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass
class VertexFeatures:
    """Per-vertex sampled features plus 3D coordinates, (N, C+3) float32.

    ``behind`` flags vertices at or behind the near plane; those rows carry
    a zero feature (their coordinate part is still filled in).
    """

    data: np.ndarray
    behind: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        self.behind = np.asarray(self.behind, dtype=bool).reshape(-1)
        if self.data.shape[0] != self.behind.shape[0]:
            raise ValueError("feature rows and flags disagree")

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def masked_avg_pool(fmap: FeatureMap, mask: np.ndarray) -> np.ndarray:
    """Average features over all cells touched by the mask.

    A cell counts as foreground when any pixel it covers is foreground.
    An empty mask yields a zero vector and a warning.
    """
    mask = np.asarray(mask)
    h, w, _ = fmap.data.shape
    stride = int(round(fmap.stride))
    if mask.shape != (h * stride, w * stride):
        raise ValueError(f"mask shape {mask.shape} does not cover a {h}x{w} grid "
                         f"at stride {stride}")
    cells = (mask != 0).reshape(h, stride, w, stride).any(axis=(1, 3))
    if not cells.any():
        warnings.warn("mask selects no feature cells; pooled feature is zero")
        return np.zeros(fmap.channels, dtype=np.float32)
    pooled = fmap.data[cells].astype(np.float64).mean(axis=0)
    return pooled.astype(np.float32)


def init_object_pose(pooled: np.ndarray, w: MlpWeights) -> RigidPose:
    """Regress a coarse object pose (6D rotation + translation) from pooled
    crop features. The pose is relative to the human frame."""
    out = mlp_forward(np.asarray(pooled, dtype=np.float32).reshape(1, -1), w)
    out = out.astype(np.float64).reshape(-1)
    if out.shape[0] != 9:
        raise ValueError(f"pose head must emit 9 values, got {out.shape[0]}")
    return RigidPose(rotation=rot6d_to_matrix(out[:6]), translation=out[6:9])


def human_frame(pelvis: np.ndarray) -> RigidPose:
    """The canonical human-centered frame: world axes, origin at the pelvis."""
    return RigidPose(translation=np.asarray(pelvis, dtype=np.float64))


def compose_to_world(rel: RigidPose, frame: RigidPose) -> RigidPose:
    """Map a pose expressed in the human frame into world coordinates."""
    return pose_compose(frame, rel)


def sample_vertex_features(fmap: FeatureMap, cam: Camera,
                           verts: np.ndarray) -> VertexFeatures:
    """Project vertices with the crop camera and sample the feature grid.

    Projections are divided by the stride (cell-center convention) before
    bilinear sampling; out-of-crop projections clamp to the border. Rows for
    behind-camera vertices get a zero feature and a raised flag.
    """
    verts = np.asarray(verts, dtype=np.float64).reshape(-1, 3)
    z = verts[:, 2]
    valid = z > MIN_DEPTH
    zs = np.where(valid, z, 1.0)
    us = (cam.fx * verts[:, 0] / zs + cam.cx) / fmap.stride
    vs = (cam.fy * verts[:, 1] / zs + cam.cy) / fmap.stride
    feats = kernels.bilinear_many(fmap.data, us, vs)
    feats[~valid] = 0.0
    data = np.concatenate([feats, verts.astype(np.float32)], axis=1)
    return VertexFeatures(data=data, behind=~valid)


def embed_vertices(raw: VertexFeatures, w: MlpWeights) -> np.ndarray:
    """Per-entity MLP from raw (C+3)-dim rows to the model latent space."""
    if raw.dim != w.in_dim:
        raise ValueError(f"vertex feature dim {raw.dim} != embed MLP input {w.in_dim}")
    return mlp_forward(raw.data, w)


def fps_subsample(verts: np.ndarray, target: int = MAX_OBJECT_VERTS) -> np.ndarray:
    """Indices of a farthest-point subsample (deterministic, starts at 0).

    Returns all indices when the set is already small enough.
    """
    verts = np.asarray(verts, dtype=np.float64).reshape(-1, 3)
    n = len(verts)
    if n <= target:
        return np.arange(n, dtype=np.int64)
    chosen = np.empty(target, dtype=np.int64)
    chosen[0] = 0
    d2 = ((verts - verts[0]) ** 2).sum(axis=1)
    for i in range(1, target):
        nxt = int(np.argmax(d2))
        chosen[i] = nxt
        d2 = np.minimum(d2, ((verts - verts[nxt]) ** 2).sum(axis=1))
    return chosen
