"""Stacked per-sequence state shared by losses, metrics and bundle IO."""

from dataclasses import dataclass

import numpy as np

from .bodymodel import HumanParams
from .geometry import RigidPose


@dataclass
class HoiSequence:
    """One reconstructed (or ground-truth) sequence in stacked array form.

    Human parameters are stored as raw 6D rotations; object rotations as
    matrices. Meshes are the decoded per-frame vertices in meters.
    """

    root6d: np.ndarray       # (N, 6)
    theta: np.ndarray        # (N, J, 6)
    beta: np.ndarray         # (N, 10)
    trans: np.ndarray        # (N, 3)
    obj_rot: np.ndarray      # (N, 3, 3)
    obj_trans: np.ndarray    # (N, 3)
    human_verts: np.ndarray  # (N, Vh, 3)
    obj_verts: np.ndarray    # (N, Vo, 3)
    joints: np.ndarray       # (N, J, 3)
    fps: float

    def __post_init__(self):
        for name in ("root6d", "theta", "beta", "trans", "obj_rot", "obj_trans",
                     "human_verts", "obj_verts", "joints"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        n = self.root6d.shape[0]
        for name in ("theta", "beta", "trans", "obj_rot", "obj_trans",
                     "human_verts", "obj_verts", "joints"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} has {getattr(self, name).shape[0]} frames, "
                                 f"root6d has {n}")
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")

    def __len__(self) -> int:
        return self.root6d.shape[0]

    @property
    def pelvis(self) -> np.ndarray:
        """Pelvis trajectory (N, 3): joint 0."""
        return self.joints[:, 0]

    def human_params(self, t: int) -> HumanParams:
        return HumanParams(root6d=self.root6d[t], theta=self.theta[t],
                           beta=self.beta[t], trans=self.trans[t])

    def object_pose(self, t: int) -> RigidPose:
        return RigidPose(rotation=self.obj_rot[t], translation=self.obj_trans[t])


def stack_sequence(params: list, poses: list, human_verts, obj_verts, joints,
                   fps: float) -> HoiSequence:
    """Build a HoiSequence from per-frame params/poses and decoded meshes."""
    return HoiSequence(
        root6d=np.stack([p.root6d for p in params]),
        theta=np.stack([p.theta for p in params]),
        beta=np.stack([p.beta for p in params]),
        trans=np.stack([p.trans for p in params]),
        obj_rot=np.stack([p.rotation for p in poses]),
        obj_trans=np.stack([p.translation for p in poses]),
        human_verts=np.asarray(human_verts, dtype=np.float64),
        obj_verts=np.asarray(obj_verts, dtype=np.float64),
        joints=np.asarray(joints, dtype=np.float64),
        fps=fps)
