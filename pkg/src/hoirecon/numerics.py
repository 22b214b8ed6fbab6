"""Float32 tensor math for the network stack.

Everything here takes and returns float32 arrays; a few routines use float64
internally where it is cheap and buys real accuracy (bilinear blending,
softmax normalizers stay f32 since numpy's pairwise sums are accurate
enough). Oracles in the test suite recompute these ops in float64.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

F32 = np.float32
LN_EPS = 1e-5


@dataclass(frozen=True)
class AttentionConfig:
    """Dimensions of one attention stack."""

    model_dim: int = 512
    num_heads: int = 8
    ffn_dim: int = 2048

    def __post_init__(self):
        if self.model_dim <= 0 or self.num_heads <= 0 or self.ffn_dim <= 0:
            raise ValueError(f"non-positive attention dims: {self}")
        if self.model_dim % self.num_heads != 0:
            raise ValueError(
                f"model_dim {self.model_dim} not divisible by num_heads {self.num_heads}")

    @property
    def head_dim(self) -> int:
        return self.model_dim // self.num_heads


@dataclass
class MlpWeights:
    """Two linear layers with a GELU between them."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        if self.w1.shape[1] != self.b1.shape[0] or self.w2.shape[1] != self.b2.shape[0]:
            raise ValueError("MLP bias shapes do not match weights")
        if self.w1.shape[1] != self.w2.shape[0]:
            raise ValueError(
                f"MLP hidden dims disagree: {self.w1.shape} vs {self.w2.shape}")

    @property
    def in_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def out_dim(self) -> int:
        return self.w2.shape[1]


@dataclass
class AttentionWeights:
    """Projection matrices (D, D) and biases (D,) for one attention op."""

    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    bq: np.ndarray
    bk: np.ndarray
    bv: np.ndarray
    bo: np.ndarray


@dataclass
class AttentionBlockWeights:
    """One post-norm transformer block: attention, LN, FFN, LN."""

    attn: AttentionWeights
    ln1_gain: np.ndarray
    ln1_bias: np.ndarray
    ffn: MlpWeights
    ln2_gain: np.ndarray
    ln2_bias: np.ndarray


def _as_f32(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=F32)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Plain 2-D float32 matrix product with shape validation."""
    a = _as_f32(a)
    b = _as_f32(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-D inputs, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    return a @ b


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax of a 2-D array."""
    x = _as_f32(x)
    if x.ndim != 2:
        raise ValueError(f"softmax_rows expects a 2-D array, got shape {x.shape}")
    return _softmax_last(x)


def _softmax_last(x: np.ndarray) -> np.ndarray:
    m = np.max(x, axis=-1, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=-1, keepdims=True)


def layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray,
               eps: float = LN_EPS) -> np.ndarray:
    """Layer normalization over the last axis, then affine."""
    x = _as_f32(x)
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    y = xc / np.sqrt(var + F32(eps))
    return y * _as_f32(gain) + _as_f32(bias)


def gelu(x: np.ndarray) -> np.ndarray:
    """GELU activation (tanh form)."""
    x = _as_f32(x)
    c = F32(np.sqrt(2.0 / np.pi))
    return F32(0.5) * x * (F32(1.0) + np.tanh(c * (x + F32(0.044715) * x * x * x)))


def mlp_forward(x: np.ndarray, w: MlpWeights) -> np.ndarray:
    """linear -> GELU -> linear."""
    x = _as_f32(x)
    if x.shape[-1] != w.in_dim:
        raise ValueError(f"MLP input dim {x.shape[-1]} != weight in_dim {w.in_dim}")
    h = gelu(x @ _as_f32(w.w1) + _as_f32(w.b1))
    return h @ _as_f32(w.w2) + _as_f32(w.b2)


def ffn(x: np.ndarray, w: MlpWeights, cfg: AttentionConfig) -> np.ndarray:
    """Transformer feed-forward; validates dims against the config."""
    if w.in_dim != cfg.model_dim or w.out_dim != cfg.model_dim:
        raise ValueError(f"FFN dims {w.w1.shape}/{w.w2.shape} do not match model_dim "
                         f"{cfg.model_dim}")
    if w.w1.shape[1] != cfg.ffn_dim:
        raise ValueError(f"FFN hidden dim {w.w1.shape[1]} != ffn_dim {cfg.ffn_dim}")
    return mlp_forward(x, w)


def bilinear_sample(grid: np.ndarray, u: float, v: float) -> np.ndarray:
    """Bilinear sample of an (h, w, C) grid at one (u, v) position.

    Coordinates address cell centers ((0, 0) is the center of the top-left
    cell, u runs along width); out-of-range positions clamp to the border.
    """
    grid = np.ascontiguousarray(grid, dtype=F32)
    if grid.ndim != 3:
        raise ValueError(f"grid must be (h, w, C), got shape {grid.shape}")
    h, w, _ = grid.shape
    u = min(max(float(u), 0.0), w - 1.0)
    v = min(max(float(v), 0.0), h - 1.0)
    u0 = int(np.floor(u))
    v0 = int(np.floor(v))
    u1 = min(u0 + 1, w - 1)
    v1 = min(v0 + 1, h - 1)
    fu = u - u0
    fv = v - v0
    wa = (1.0 - fu) * (1.0 - fv)
    wb = fu * (1.0 - fv)
    wc = (1.0 - fu) * fv
    wd = fu * fv
    out = (wa * grid[v0, u0].astype(np.float64) + wb * grid[v0, u1].astype(np.float64)
           + wc * grid[v1, u0].astype(np.float64) + wd * grid[v1, u1].astype(np.float64))
    return out.astype(F32)


def split_heads(x: np.ndarray, num_heads: int) -> np.ndarray:
    """(N, D) -> (H, N, D/H)."""
    n, d = x.shape
    return np.ascontiguousarray(x.reshape(n, num_heads, d // num_heads).transpose(1, 0, 2))


def merge_heads(x: np.ndarray) -> np.ndarray:
    """(H, N, hd) -> (N, D)."""
    h, n, hd = x.shape
    return np.ascontiguousarray(x.transpose(1, 0, 2).reshape(n, h * hd))


def scaled_attention(qh: np.ndarray, kh: np.ndarray, vh: np.ndarray,
                     bias_mask: np.ndarray | None = None):
    """Softmax attention on per-head tensors (H, N, hd).

    Returns (out (H, Nq, hd), attn (H, Nq, Nk)).
    """
    hd = qh.shape[2]
    scores = np.matmul(qh, kh.transpose(0, 2, 1)) / F32(np.sqrt(hd))
    if bias_mask is not None:
        scores = scores + bias_mask[None, :, :].astype(F32)
    attn = _softmax_last(scores)
    return np.matmul(attn, vh), attn


def multi_head_attention(q_in: np.ndarray, k_in: np.ndarray, v_in: np.ndarray,
                         w: AttentionWeights, cfg: AttentionConfig,
                         bias_mask: np.ndarray | None = None):
    """Multi-head attention with output projection.

    Returns (output (Nq, D), head-averaged attention (Nq, Nk)). bias_mask
    entries must be 0 or -inf and are added to the logits.
    """
    q_in = _as_f32(q_in)
    k_in = _as_f32(k_in)
    v_in = _as_f32(v_in)
    d = cfg.model_dim
    if q_in.ndim != 2 or q_in.shape[1] != d:
        raise ValueError(f"query shape {q_in.shape} does not match model_dim {d}")
    if k_in.ndim != 2 or k_in.shape[1] != d:
        raise ValueError(f"key shape {k_in.shape} does not match model_dim {d}")
    if v_in.shape != k_in.shape:
        raise ValueError(f"key/value shapes differ: {k_in.shape} vs {v_in.shape}")
    if bias_mask is not None:
        if bias_mask.shape != (q_in.shape[0], k_in.shape[0]):
            raise ValueError(f"bias_mask shape {bias_mask.shape} != "
                             f"({q_in.shape[0]}, {k_in.shape[0]})")
        finite = bias_mask[np.isfinite(bias_mask)]
        if finite.size and np.any(finite != 0):
            raise ValueError("bias_mask entries must be 0 or -inf")
    q = q_in @ _as_f32(w.wq) + _as_f32(w.bq)
    k = k_in @ _as_f32(w.wk) + _as_f32(w.bk)
    v = v_in @ _as_f32(w.wv) + _as_f32(w.bv)
    out_h, attn = scaled_attention(split_heads(q, cfg.num_heads),
                                   split_heads(k, cfg.num_heads),
                                   split_heads(v, cfg.num_heads), bias_mask)
    out = merge_heads(out_h) @ _as_f32(w.wo) + _as_f32(w.bo)
    return out, attn.mean(axis=0)


def bilinear_many(grid: np.ndarray, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """Batched bilinear_sample over N positions (hot path, see kernels)."""
    return kernels.bilinear_many(grid, us, vs)
