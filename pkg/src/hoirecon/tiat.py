"""Temporal attention over per-frame motion tokens.

Frames are summarized into single tokens (pooled object features + pooled
projected joint features + an MLP over the global context vector, summed),
then refined by a stack of post-norm transformer blocks whose queries and
keys carry rotary position embeddings and whose logits are masked to a
local temporal window. Regression heads decode human parameters and the
object pose per frame.
"""

from dataclasses import dataclass, field

import numpy as np

from .bodymodel import N_JOINTS, N_SHAPE, HumanParams
from .encoder import VertexFeatures
from .geometry import RigidPose, rot6d_to_matrix
from .numerics import (F32, AttentionBlockWeights, AttentionConfig, MlpWeights,
                       ffn, layer_norm, merge_heads, mlp_forward,
                       scaled_attention, split_heads)

ROPE_BASE = 10000.0

# human head output layout: root 6D | per-joint 6D | shape | translation
HUMAN_PARAM_DIM = 6 + N_JOINTS * 6 + N_SHAPE + 3
OBJECT_PARAM_DIM = 9


@dataclass(frozen=True)
class TiatConfig:
    """Temporal stack dimensions plus the window and rotary base."""

    model_dim: int = 512
    num_heads: int = 8
    ffn_dim: int = 2048
    num_layers: int = 12
    window: int = 64
    rope_base: float = ROPE_BASE

    def __post_init__(self):
        if self.num_layers <= 0:
            raise ValueError(f"num_layers must be positive, got {self.num_layers}")
        if self.window <= 0:
            raise ValueError(f"window must be positive, got {self.window}")
        if (self.model_dim // self.num_heads) % 2 != 0:
            raise ValueError(f"head_dim {self.model_dim // self.num_heads} must be "
                             "even for rotary embeddings")
        AttentionConfig(self.model_dim, self.num_heads, self.ffn_dim)  # validates

    @property
    def attention(self) -> AttentionConfig:
        return AttentionConfig(self.model_dim, self.num_heads, self.ffn_dim)


@dataclass
class GlobalContext:
    """Per-frame global cue: crop box (center x, center y, side) and the 3D
    pelvis position, packed in that order."""

    box_center: np.ndarray
    box_side: float
    pelvis: np.ndarray

    def vector(self) -> np.ndarray:
        c = np.asarray(self.box_center, dtype=np.float64).reshape(2)
        p = np.asarray(self.pelvis, dtype=np.float64).reshape(3)
        return np.array([c[0], c[1], float(self.box_side), p[0], p[1], p[2]],
                        dtype=np.float32)


@dataclass
class TokenWeights:
    """Weights of the per-frame tokenizer."""

    joint_proj_w: np.ndarray   # (C+3, D)
    joint_proj_b: np.ndarray   # (D,)
    mlp_obj: MlpWeights        # D -> D
    mlp_joint: MlpWeights      # D -> D
    mlp_global: MlpWeights     # 6 -> D, final layer zero-initialized


def tokenize_frame(f_obj: np.ndarray, joint_feats: VertexFeatures,
                   g: GlobalContext, w: TokenWeights) -> np.ndarray:
    """Fuse one frame into a single motion token (D,).

    MLP_O(avgpool(object features)) + MLP_J(avgpool(linear(joint features)))
    + MLP_G(global context). MLP_G's final layer ships zero-initialized, so
    an untrained model is exactly invariant to the global vector.
    """
    f_obj = np.ascontiguousarray(f_obj, dtype=F32)
    if f_obj.ndim != 2 or f_obj.shape[1] != w.mlp_obj.in_dim:
        raise ValueError(f"object features {f_obj.shape} do not match tokenizer "
                         f"dim {w.mlp_obj.in_dim}")
    if joint_feats.dim != w.joint_proj_w.shape[0]:
        raise ValueError(f"joint feature dim {joint_feats.dim} != projection input "
                         f"{w.joint_proj_w.shape[0]}")
    tok_o = mlp_forward(f_obj.mean(axis=0), w.mlp_obj)
    j = joint_feats.data @ np.ascontiguousarray(w.joint_proj_w, dtype=F32) \
        + np.ascontiguousarray(w.joint_proj_b, dtype=F32)
    tok_j = mlp_forward(j.mean(axis=0), w.mlp_joint)
    tok_g = mlp_forward(g.vector(), w.mlp_global)
    return tok_o + tok_j + tok_g


def rope_rotate(x: np.ndarray, position: float, base: float = ROPE_BASE) -> np.ndarray:
    """Rotate consecutive pairs of the last axis by position-dependent angles.

    Pair i spans (2i, 2i+1) and turns by position * base^(-2i / dim). Angles
    are computed in float64; the result is float32 like the input.
    """
    x = np.ascontiguousarray(x, dtype=F32)
    dim = x.shape[-1]
    if dim % 2 != 0:
        raise ValueError(f"rope needs an even dim, got {dim}")
    angles = position * base ** (-2.0 * np.arange(dim // 2) / dim)
    cos = np.cos(angles).astype(F32)
    sin = np.sin(angles).astype(F32)
    even = x[..., 0::2]
    odd = x[..., 1::2]
    out = np.empty_like(x)
    out[..., 0::2] = even * cos - odd * sin
    out[..., 1::2] = even * sin + odd * cos
    return out


def _rope_table(n: int, dim: int, base: float):
    """cos/sin tables for positions 0..n-1, shape (n, dim/2) float32."""
    angles = np.arange(n)[:, None] * base ** (-2.0 * np.arange(dim // 2)[None, :] / dim)
    return np.cos(angles).astype(F32), np.sin(angles).astype(F32)


def _rope_apply(xh: np.ndarray, cos: np.ndarray, sin: np.ndarray) -> np.ndarray:
    """Apply precomputed tables to (H, N, hd) head tensors."""
    even = xh[..., 0::2]
    odd = xh[..., 1::2]
    out = np.empty_like(xh)
    out[..., 0::2] = even * cos[None] - odd * sin[None]
    out[..., 1::2] = even * sin[None] + odd * cos[None]
    return out


def local_mask(n: int, window: int) -> np.ndarray:
    """Additive attention mask: 0 where |t - s| < window, else -inf."""
    if n <= 0:
        raise ValueError(f"sequence length must be positive, got {n}")
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    idx = np.arange(n)
    near = np.abs(idx[:, None] - idx[None, :]) < window
    mask = np.where(near, 0.0, -np.inf).astype(F32)
    return mask


def tiat_forward(tokens: np.ndarray, cfg: TiatConfig,
                 layers: list[AttentionBlockWeights]) -> np.ndarray:
    """Run the temporal stack over (N, D) tokens.

    Queries and keys are rotary-rotated by their frame index before the
    masked softmax; values are not rotated. Blocks are post-norm.
    """
    x = np.ascontiguousarray(tokens, dtype=F32)
    if x.ndim != 2 or x.shape[1] != cfg.model_dim:
        raise ValueError(f"tokens {x.shape} do not match model_dim {cfg.model_dim}")
    if len(layers) != cfg.num_layers:
        raise ValueError(f"got {len(layers)} layer weights, config says "
                         f"{cfg.num_layers}")
    n = x.shape[0]
    acfg = cfg.attention
    mask = local_mask(n, cfg.window)
    cos, sin = _rope_table(n, acfg.head_dim, cfg.rope_base)
    for block in layers:
        w = block.attn
        q = x @ np.ascontiguousarray(w.wq, F32) + np.ascontiguousarray(w.bq, F32)
        k = x @ np.ascontiguousarray(w.wk, F32) + np.ascontiguousarray(w.bk, F32)
        v = x @ np.ascontiguousarray(w.wv, F32) + np.ascontiguousarray(w.bv, F32)
        qh = _rope_apply(split_heads(q, acfg.num_heads), cos, sin)
        kh = _rope_apply(split_heads(k, acfg.num_heads), cos, sin)
        vh = split_heads(v, acfg.num_heads)
        out_h, _ = scaled_attention(qh, kh, vh, mask)
        y = merge_heads(out_h) @ np.ascontiguousarray(w.wo, F32) \
            + np.ascontiguousarray(w.bo, F32)
        x = layer_norm(x + y, block.ln1_gain, block.ln1_bias)
        x = layer_norm(x + ffn(x, block.ffn, acfg), block.ln2_gain, block.ln2_bias)
    return x


@dataclass
class HeadWeights:
    """Two-layer regression heads, one per branch."""

    human: MlpWeights    # D -> HUMAN_PARAM_DIM
    object: MlpWeights   # D -> OBJECT_PARAM_DIM


def regress_parameters(refined: np.ndarray, heads: HeadWeights):
    """Decode per-frame human parameters and object poses.

    Returns (list of HumanParams, list of RigidPose), one entry per frame.
    Object rotations pass through the 6D Gram-Schmidt decode, so they are
    orthonormal for any head output.
    """
    refined = np.ascontiguousarray(refined, dtype=F32)
    h = mlp_forward(refined, heads.human).astype(np.float64)
    o = mlp_forward(refined, heads.object).astype(np.float64)
    if h.shape[1] != HUMAN_PARAM_DIM:
        raise ValueError(f"human head emits {h.shape[1]}, expected {HUMAN_PARAM_DIM}")
    if o.shape[1] != OBJECT_PARAM_DIM:
        raise ValueError(f"object head emits {o.shape[1]}, expected {OBJECT_PARAM_DIM}")
    params = []
    poses = []
    for t in range(refined.shape[0]):
        row = h[t]
        params.append(HumanParams(
            root6d=row[:6],
            theta=row[6:6 + N_JOINTS * 6].reshape(N_JOINTS, 6),
            beta=row[6 + N_JOINTS * 6:6 + N_JOINTS * 6 + N_SHAPE],
            trans=row[-3:]))
        poses.append(RigidPose(rotation=rot6d_to_matrix(o[t, :6]),
                               translation=o[t, 6:9]))
    return params, poses
