"""Interaction-centric square crops from full-frame masks.

The crop is centered on the projected pelvis and sized so the padded union
of the human and object masks fits inside; masks are resampled to the crop
resolution with nearest neighbor.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import Camera, crop_intrinsics, project_point

DEFAULT_PAD = 1.2
DEFAULT_CROP = 224


@dataclass
class CropSpec:
    """One frame's square crop: center/side in source pixels, plus the
    intrinsics of the cropped view."""

    center: np.ndarray
    side: float
    target_size: int
    cropped_cam: Camera
    fallback: bool = False
    top_left: np.ndarray = field(init=False)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64).reshape(2)
        self.side = float(self.side)
        if self.side <= 0:
            raise ValueError(f"crop side must be positive, got {self.side}")
        self.top_left = self.center - self.side / 2.0

    def to_pixels(self, uv: np.ndarray) -> np.ndarray:
        """Map source pixel coordinates into crop pixel coordinates."""
        uv = np.asarray(uv, dtype=np.float64)
        return (uv - self.top_left) * (self.target_size / self.side)


@dataclass
class FrameSequence:
    """Per-frame masks of one scene (uint8, nonzero = foreground)."""

    human_masks: np.ndarray   # (N, H, W)
    object_masks: np.ndarray  # (N, H, W)
    fps: float

    def __post_init__(self):
        self.human_masks = np.asarray(self.human_masks, dtype=np.uint8)
        self.object_masks = np.asarray(self.object_masks, dtype=np.uint8)
        if self.human_masks.shape != self.object_masks.shape:
            raise ValueError(f"mask stacks differ in shape: "
                             f"{self.human_masks.shape} vs {self.object_masks.shape}")
        if self.human_masks.ndim != 3:
            raise ValueError(f"masks must be (N, H, W), got {self.human_masks.shape}")
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")

    def __len__(self) -> int:
        return self.human_masks.shape[0]


def compute_crop_box(cam: Camera, pelvis_3d, human_mask: np.ndarray,
                     object_mask: np.ndarray, pad: float = DEFAULT_PAD,
                     target_size: int = DEFAULT_CROP) -> CropSpec:
    """Square crop around the projected pelvis covering the padded masks.

    The side is 2 * pad * (max pixel-center distance of any union-mask
    foreground pixel from the center, per axis). Both masks empty falls
    back to side = 0.5 * min(H, W) with a warning and the fallback flag set.
    """
    if pad <= 0:
        raise ValueError(f"pad must be positive, got {pad}")
    center = np.asarray(project_point(cam, pelvis_3d), dtype=np.float64)
    union = (np.asarray(human_mask) != 0) | (np.asarray(object_mask) != 0)
    rows, cols = np.nonzero(union)
    fallback = rows.size == 0
    if fallback:
        h, w = union.shape
        side = 0.5 * min(h, w)
        warnings.warn("both masks empty; falling back to a fixed-size crop")
    else:
        extent = max(np.abs(cols - center[0]).max(), np.abs(rows - center[1]).max())
        side = 2.0 * pad * max(extent, 1.0)
    cropped = crop_intrinsics(cam, center - side / 2.0, side, target_size)
    return CropSpec(center=center, side=side, target_size=target_size,
                    cropped_cam=cropped, fallback=fallback)


def resample_mask(mask: np.ndarray, spec: CropSpec) -> np.ndarray:
    """Nearest-neighbor resample of a full-frame mask into the crop."""
    mask = np.asarray(mask)
    h, w = mask.shape
    s = spec.target_size
    # crop-pixel centers back-projected into source pixel coordinates
    scale = spec.side / s
    us = np.rint(np.arange(s) * scale + spec.top_left[0]).astype(np.int64)
    vs = np.rint(np.arange(s) * scale + spec.top_left[1]).astype(np.int64)
    uok = (us >= 0) & (us < w)
    vok = (vs >= 0) & (vs < h)
    out = np.zeros((s, s), dtype=np.uint8)
    if uok.any() and vok.any():
        sub = mask[np.ix_(vs[vok], us[uok])]
        out[np.ix_(vok, uok)] = (sub != 0).astype(np.uint8) * 255
    return out


def make_crop_sequence(seq: FrameSequence, cam: Camera, pelvis_traj: np.ndarray,
                       pad: float = DEFAULT_PAD, target_size: int = DEFAULT_CROP):
    """Crop every frame; returns a list of (human mask, object mask, CropSpec).

    Per-frame failures are re-raised with the frame index attached.
    """
    pelvis_traj = np.asarray(pelvis_traj, dtype=np.float64).reshape(-1, 3)
    if len(pelvis_traj) != len(seq):
        raise ValueError(f"pelvis trajectory has {len(pelvis_traj)} frames, "
                         f"masks have {len(seq)}")
    out = []
    for i in range(len(seq)):
        try:
            spec = compute_crop_box(cam, pelvis_traj[i], seq.human_masks[i],
                                    seq.object_masks[i], pad, target_size)
        except ValueError as e:
            raise type(e)(f"frame {i}: {e}") from e
        out.append((resample_mask(seq.human_masks[i], spec),
                    resample_mask(seq.object_masks[i], spec), spec))
    return out
