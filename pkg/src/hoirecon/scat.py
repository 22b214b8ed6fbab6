"""Spatial contact attention over object and human vertex features.

Two single post-norm blocks per frame: self-attention refines the object
tokens, then cross-attention (object queries, human keys/values) injects
human context. The head-averaged cross-attention matrix doubles as a soft
contact estimate; its column mean over queries is the per-human-vertex
contact heatmap.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import (AttentionBlockWeights, AttentionConfig, ffn, layer_norm,
                       multi_head_attention)


@dataclass
class ScatWeights:
    refine: AttentionBlockWeights   # object self-attention block
    inject: AttentionBlockWeights   # object->human cross-attention block


def _block(x_q, x_kv, block: AttentionBlockWeights, cfg: AttentionConfig):
    y, attn = multi_head_attention(x_q, x_kv, x_kv, block.attn, cfg)
    t = layer_norm(x_q + y, block.ln1_gain, block.ln1_bias)
    out = layer_norm(t + ffn(t, block.ffn, cfg), block.ln2_gain, block.ln2_bias)
    return out, attn


def internal_refine(f_obj: np.ndarray, w: ScatWeights, cfg: AttentionConfig) -> np.ndarray:
    """Self-attention + FFN over object features, post-norm residuals."""
    out, _ = _block(f_obj, f_obj, w.refine, cfg)
    return out


def contact_inject(f_obj: np.ndarray, f_human: np.ndarray, w: ScatWeights,
                   cfg: AttentionConfig):
    """Cross-attend object queries into human keys/values.

    Returns (refined object features (N_o, D), head-averaged attention
    (N_o, N_h)); attention rows are convex weights over human vertices.
    """
    return _block(f_obj, f_human, w.inject, cfg)


def contact_heatmap(attn: np.ndarray) -> np.ndarray:
    """Column mean of the attention map: one weight per human vertex.

    The heatmap sums to 1 (each of the N_o rows sums to 1 and the mean over
    rows preserves that total).
    """
    attn = np.asarray(attn)
    if attn.ndim != 2:
        raise ValueError(f"attention map must be 2-D, got shape {attn.shape}")
    return attn.mean(axis=0)
