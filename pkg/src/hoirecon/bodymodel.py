"""Toy articulated body model: 24 joints, rigid per-bone skinning.

This is a deliberately small stand-in for a full statistical body model.
Joint rotations are 6D vectors, a 10-dim shape vector scales bone lengths
linearly, and every mesh vertex is rigidly attached to one joint, so
distances inside a bone segment are pose-invariant. World axes follow the
camera: x right, y down, z forward (an upright human extends along -y).
"""

from dataclasses import dataclass, field

import numpy as np

from . import fileio
from .geometry import IDENTITY_6D, rot6d_to_matrix

N_JOINTS = 24
N_SHAPE = 10
N_VERTS = 430

JOINT_NAMES = [
    "pelvis", "spine1", "spine2", "chest", "neck", "head",
    "l_hip", "l_knee", "l_ankle", "l_foot",
    "r_hip", "r_knee", "r_ankle", "r_foot",
    "l_clavicle", "l_shoulder", "l_elbow", "l_wrist", "l_hand",
    "r_clavicle", "r_shoulder", "r_elbow", "r_wrist", "r_hand",
]

_PARENTS = [0, 0, 1, 2, 3, 4, 0, 6, 7, 8, 0, 10, 11, 12, 3, 14, 15, 16, 17, 3, 19, 20, 21, 22]

_OFFSETS = [
    (0.00, 0.00, 0.00),    # pelvis (rest root position)
    (0.00, -0.15, 0.00),   # spine1
    (0.00, -0.15, 0.00),   # spine2
    (0.00, -0.15, 0.00),   # chest
    (0.00, -0.15, 0.00),   # neck
    (0.00, -0.12, 0.00),   # head
    (-0.09, 0.02, 0.00),   # l_hip
    (0.00, 0.40, 0.00),    # l_knee
    (0.00, 0.40, 0.00),    # l_ankle
    (0.00, 0.05, -0.10),   # l_foot
    (0.09, 0.02, 0.00),    # r_hip
    (0.00, 0.40, 0.00),    # r_knee
    (0.00, 0.40, 0.00),    # r_ankle
    (0.00, 0.05, -0.10),   # r_foot
    (-0.08, -0.12, 0.00),  # l_clavicle
    (-0.10, 0.00, 0.00),   # l_shoulder
    (-0.26, 0.00, 0.00),   # l_elbow
    (-0.25, 0.00, 0.00),   # l_wrist
    (-0.08, 0.00, 0.00),   # l_hand
    (0.08, -0.12, 0.00),   # r_clavicle
    (0.10, 0.00, 0.00),    # r_shoulder
    (0.26, 0.00, 0.00),    # r_elbow
    (0.25, 0.00, 0.00),    # r_wrist
    (0.08, 0.00, 0.00),    # r_hand
]

# bone radius by child joint, used by the procedural surface
_RADII = {
    1: 0.075, 2: 0.080, 3: 0.085, 4: 0.045, 5: 0.080,
    6: 0.055, 7: 0.055, 8: 0.045, 9: 0.035,
    10: 0.055, 11: 0.055, 12: 0.045, 13: 0.035,
    14: 0.040, 15: 0.042, 16: 0.038, 17: 0.032, 18: 0.028,
    19: 0.040, 20: 0.042, 21: 0.038, 22: 0.032, 23: 0.028,
}


@dataclass
class HumanParams:
    """Per-frame human state: root orientation, joint 6D rotations, shape,
    root translation."""

    root6d: np.ndarray = field(default_factory=lambda: IDENTITY_6D.copy())
    theta: np.ndarray = field(default_factory=lambda: np.tile(IDENTITY_6D, (N_JOINTS, 1)))
    beta: np.ndarray = field(default_factory=lambda: np.zeros(N_SHAPE))
    trans: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.root6d = np.asarray(self.root6d, dtype=np.float64).reshape(6)
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1, 6)
        self.beta = np.asarray(self.beta, dtype=np.float64).reshape(-1)
        self.trans = np.asarray(self.trans, dtype=np.float64).reshape(3)

    def to_dict(self) -> dict:
        return {"root6d": self.root6d.tolist(),
                "theta": self.theta.reshape(-1).tolist(),
                "beta": self.beta.tolist(),
                "trans": self.trans.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "HumanParams":
        return cls(root6d=np.asarray(d["root6d"]),
                   theta=np.asarray(d["theta"]).reshape(-1, 6),
                   beta=np.asarray(d["beta"]),
                   trans=np.asarray(d["trans"]))


@dataclass
class ToySkeleton:
    """Joint tree, rest geometry and per-vertex rigid attachments."""

    parents: np.ndarray
    offsets: np.ndarray          # (J, 3) bone vector from parent (root: rest position)
    shape_basis: np.ndarray      # (N_SHAPE, J) bone-length scale directions
    rest_vertices: np.ndarray    # (V, 3)
    vertex_joint: np.ndarray     # (V,) attachment joint per vertex
    faces: np.ndarray            # (F, 3) triangles

    def __post_init__(self):
        self.parents = np.asarray(self.parents, dtype=np.int64)
        self.offsets = np.asarray(self.offsets, dtype=np.float64)
        self.shape_basis = np.asarray(self.shape_basis, dtype=np.float64)
        self.rest_vertices = np.asarray(self.rest_vertices, dtype=np.float64)
        self.vertex_joint = np.asarray(self.vertex_joint, dtype=np.int64)
        self.faces = np.asarray(self.faces, dtype=np.int64)
        j = len(self.parents)
        if self.parents[0] != 0:
            raise ValueError("joint 0 must be the root (parent[0] == 0)")
        if np.any(self.parents[1:] >= np.arange(1, j)):
            raise ValueError("parents must precede children in joint order")
        if self.shape_basis.shape != (N_SHAPE, j):
            raise ValueError(f"shape basis must be ({N_SHAPE}, {j}), "
                             f"got {self.shape_basis.shape}")

    @property
    def n_joints(self) -> int:
        return len(self.parents)

    def rest_joints(self) -> np.ndarray:
        """Rest joint positions (identity pose, zero shape)."""
        pos = np.zeros((self.n_joints, 3))
        pos[0] = self.offsets[0]
        for j in range(1, self.n_joints):
            pos[j] = pos[self.parents[j]] + self.offsets[j]
        return pos


def _shape_basis() -> np.ndarray:
    basis = np.zeros((N_SHAPE, N_JOINTS))
    basis[0, 1:] = 0.06                       # overall size
    basis[1, 6:14] = 0.08                     # legs
    basis[2, 14:24] = 0.08                    # arms
    basis[3, 1:6] = 0.08                      # spine and head chain
    basis[4, [4, 5]] = 0.05                   # neck/head
    basis[5, [9, 13, 18, 23]] = 0.05          # hands/feet
    for k in range(6, N_SHAPE):
        basis[k, 1:] = 0.02 * np.cos(np.arange(1, N_JOINTS) * (k - 2.0))
    return basis


def _orthobasis(axis: np.ndarray):
    """Two unit vectors perpendicular to axis."""
    a = axis / np.linalg.norm(axis)
    helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 0.0, 1.0])
    e1 = np.cross(a, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    return e1, e2


def _tube(start, end, radius, n_rings, n_around, fractions=None):
    axis = end - start
    e1, e2 = _orthobasis(axis)
    if fractions is None:
        fractions = np.linspace(0.15, 0.85, n_rings)
    verts = []
    for f in fractions:
        center = start + f * axis
        for k in range(n_around):
            ang = 2.0 * np.pi * k / n_around
            verts.append(center + radius * (np.cos(ang) * e1 + np.sin(ang) * e2))
    faces = []
    for r in range(n_rings - 1):
        for k in range(n_around):
            a = r * n_around + k
            b = r * n_around + (k + 1) % n_around
            c = (r + 1) * n_around + k
            d = (r + 1) * n_around + (k + 1) % n_around
            faces.append([a, b, d])
            faces.append([a, d, c])
    return np.asarray(verts), np.asarray(faces, dtype=np.int64)


def default_skeleton() -> ToySkeleton:
    """The standard 24-joint humanoid with a 430-vertex procedural surface."""
    parents = np.asarray(_PARENTS, dtype=np.int64)
    offsets = np.asarray(_OFFSETS, dtype=np.float64)
    rest = np.zeros((N_JOINTS, 3))
    for j in range(1, N_JOINTS):
        rest[j] = rest[parents[j]] + offsets[j]

    verts = []
    vjoint = []
    faces = []
    # one tube per bone, skinned to the parent joint (the joint whose
    # rotation moves that segment)
    for j in range(1, N_JOINTS):
        p = parents[j]
        tv, tf = _tube(rest[p], rest[j], _RADII[j], n_rings=3, n_around=6)
        faces.append(tf + sum(len(v) for v in verts))
        verts.append(tv)
        vjoint.extend([p] * len(tv))
    # pelvis blob
    blob_v, blob_f = _tube(rest[0] + np.array([0.0, -0.06, 0.0]),
                           rest[0] + np.array([0.0, 0.08, 0.0]),
                           0.11, n_rings=2, n_around=8,
                           fractions=np.array([0.1, 0.9]))
    faces.append(blob_f + sum(len(v) for v in verts))
    verts.append(blob_v)
    vjoint.extend([0] * len(blob_v))

    all_verts = np.concatenate(verts, axis=0)
    all_faces = np.concatenate(faces, axis=0)
    skel = ToySkeleton(parents=parents, offsets=offsets, shape_basis=_shape_basis(),
                       rest_vertices=all_verts, vertex_joint=np.asarray(vjoint),
                       faces=all_faces)
    assert len(all_verts) == N_VERTS, len(all_verts)
    return skel


def fk_transforms(skel: ToySkeleton, params: HumanParams):
    """Global joint transforms; returns (rotations (J, 3, 3), positions (J, 3)).

    theta[0] is the pelvis local rotation; the root orientation rotates the
    whole body about the root rest position and the root translation is
    applied last. Shape scales bone offsets before posing.
    """
    j = skel.n_joints
    if params.theta.shape[0] != j:
        raise ValueError(f"theta has {params.theta.shape[0]} joints, skeleton has {j}")
    scales = 1.0 + skel.shape_basis.T @ params.beta
    rot_root = rot6d_to_matrix(params.root6d)
    rots = np.empty((j, 3, 3))
    pos = np.empty((j, 3))
    rots[0] = rot_root @ rot6d_to_matrix(params.theta[0])
    pos[0] = skel.offsets[0]
    for i in range(1, j):
        p = skel.parents[i]
        pos[i] = pos[p] + rots[p] @ (scales[i] * skel.offsets[i])
        rots[i] = rots[p] @ rot6d_to_matrix(params.theta[i])
    pos += params.trans
    return rots, pos


def forward_kinematics(skel: ToySkeleton, params: HumanParams):
    """Pose the skeleton; returns (joints (J, 3), vertices (V, 3))."""
    rots, pos = fk_transforms(skel, params)
    rest_j = skel.rest_joints()
    a = skel.vertex_joint
    local = skel.rest_vertices - rest_j[a]
    verts = np.einsum("nij,nj->ni", rots[a], local) + pos[a]
    return pos, verts


def mesh_edges(faces: np.ndarray) -> np.ndarray:
    """Unique undirected edges of a triangle list, sorted (E, 2)."""
    f = np.asarray(faces, dtype=np.int64)
    pairs = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0)
    pairs.sort(axis=1)
    return np.unique(pairs, axis=0)


def save_skeleton(json_path, obj_path, skel: ToySkeleton) -> None:
    fileio.save_json(json_path, {
        "parents": skel.parents.tolist(),
        "offsets": skel.offsets.tolist(),
        "shape_basis": skel.shape_basis.tolist(),
        "vertex_joint": skel.vertex_joint.tolist(),
    })
    fileio.save_obj(obj_path, skel.rest_vertices, skel.faces)


def load_skeleton(json_path, obj_path) -> ToySkeleton:
    d = fileio.load_json(json_path)
    verts, faces = fileio.load_obj(obj_path)
    return ToySkeleton(parents=np.asarray(d["parents"]),
                       offsets=np.asarray(d["offsets"]),
                       shape_basis=np.asarray(d["shape_basis"]),
                       rest_vertices=verts,
                       vertex_joint=np.asarray(d["vertex_joint"]),
                       faces=faces if faces is not None else np.zeros((0, 3), np.int64))
