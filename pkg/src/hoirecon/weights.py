"""Checkpoint schema: tensor names, random initialization, typed loading.

A checkpoint is a flat name -> float32 tensor map (THOW on disk). The
reserved ``meta`` tensor stores [model_dim, num_heads, ffn_dim, tiat_layers,
window, feat_channels, crop_size] so a checkpoint is self-describing.
"""

from dataclasses import dataclass

import numpy as np

from .bodymodel import N_JOINTS
from .config import RunConfig
from .geometry import IDENTITY_6D
from .numerics import (AttentionBlockWeights, AttentionWeights, MlpWeights)
from .scat import ScatWeights
from .tiat import HUMAN_PARAM_DIM, OBJECT_PARAM_DIM, HeadWeights, TokenWeights

META_NAME = "meta"
META_FIELDS = ("model_dim", "num_heads", "ffn_dim", "tiat_layers", "window",
               "feat_channels", "crop_size")
INIT_STD = 0.02


class CheckpointError(ValueError):
    """Checkpoint contents do not match the expected schema."""


@dataclass
class ModelWeights:
    """All learned tensors, grouped per pipeline stage."""

    embed_human: MlpWeights
    embed_object: MlpWeights
    pose_init: MlpWeights
    scat: ScatWeights
    token: TokenWeights
    tiat_layers: list
    heads: HeadWeights
    meta: dict


def _mlp_names(prefix: str, din: int, hidden: int, dout: int) -> dict:
    return {f"{prefix}.w1": (din, hidden), f"{prefix}.b1": (hidden,),
            f"{prefix}.w2": (hidden, dout), f"{prefix}.b2": (dout,)}


def _block_names(prefix: str, d: int, f: int) -> dict:
    spec = {}
    for name in ("wq", "wk", "wv", "wo"):
        spec[f"{prefix}.{name}"] = (d, d)
    for name in ("bq", "bk", "bv", "bo"):
        spec[f"{prefix}.{name}"] = (d,)
    for name in ("ln1_g", "ln1_b", "ln2_g", "ln2_b"):
        spec[f"{prefix}.{name}"] = (d,)
    spec.update(_mlp_names(f"{prefix}.ffn", d, f, d))
    return spec


def weight_spec(cfg: RunConfig) -> dict:
    """Expected tensor name -> shape map for a config."""
    d, f, c = cfg.model_dim, cfg.ffn_dim, cfg.feat_channels
    raw = c + 3
    spec = {}
    spec.update(_mlp_names("encoder.embed_h", raw, d, d))
    spec.update(_mlp_names("encoder.embed_o", raw, d, d))
    spec.update(_mlp_names("encoder.pose_init", c, d, OBJECT_PARAM_DIM))
    spec.update(_block_names("scat.refine", d, f))
    spec.update(_block_names("scat.inject", d, f))
    spec["token.joint_proj.w"] = (raw, d)
    spec["token.joint_proj.b"] = (d,)
    spec.update(_mlp_names("token.mlp_o", d, d, d))
    spec.update(_mlp_names("token.mlp_j", d, d, d))
    spec.update(_mlp_names("token.mlp_g", 6, d, d))
    for i in range(cfg.tiat_layers):
        spec.update(_block_names(f"tiat.layer{i:02d}", d, f))
    spec.update(_mlp_names("head.human", d, d, HUMAN_PARAM_DIM))
    spec.update(_mlp_names("head.object", d, d, OBJECT_PARAM_DIM))
    spec[META_NAME] = (len(META_FIELDS),)
    return spec


def _identity_head_bias(kind: str) -> np.ndarray:
    if kind == "object":
        return np.concatenate([IDENTITY_6D, np.zeros(3)]).astype(np.float32)
    root = IDENTITY_6D
    theta = np.tile(IDENTITY_6D, N_JOINTS)
    return np.concatenate([root, theta, np.zeros(10), np.zeros(3)]).astype(np.float32)


def random_checkpoint(cfg: RunConfig, seed: int | None = None) -> dict:
    """Seeded random tensors matching the schema.

    Linear weights are N(0, 0.02); biases are zero except pose/regression
    heads, which start at the identity 6D rotation so decoded rotations are
    never degenerate, and the global-context MLP, whose final layer is
    strictly zero so an untrained token ignores the context vector.
    """
    if seed is None:
        seed = cfg.seed
    spec = weight_spec(cfg)
    rng = np.random.default_rng(seed)
    out = {}
    for name in sorted(spec):
        shape = spec[name]
        if name == META_NAME:
            out[name] = np.array([getattr(cfg, f) for f in META_FIELDS],
                                 dtype=np.float32)
        elif name.endswith(("_g",)) and ".ln" in name:
            out[name] = np.ones(shape, dtype=np.float32)
        elif len(shape) == 1:
            out[name] = np.zeros(shape, dtype=np.float32)
        else:
            out[name] = rng.normal(0.0, INIT_STD, size=shape).astype(np.float32)
    out["token.mlp_g.w2"] = np.zeros_like(out["token.mlp_g.w2"])
    out["token.mlp_g.b2"] = np.zeros_like(out["token.mlp_g.b2"])
    out["encoder.pose_init.b2"] = _identity_head_bias("object")
    out["head.object.b2"] = _identity_head_bias("object")
    out["head.human.b2"] = _identity_head_bias("human")
    return out


def meta_to_config(tensors: dict) -> RunConfig:
    """Recover the RunConfig dims stored in the meta tensor."""
    if META_NAME not in tensors:
        raise CheckpointError(f"checkpoint is missing the {META_NAME!r} tensor")
    meta = np.asarray(tensors[META_NAME]).reshape(-1)
    if meta.shape[0] != len(META_FIELDS):
        raise CheckpointError(f"meta tensor has {meta.shape[0]} entries, expected "
                              f"{len(META_FIELDS)}")
    values = {f: int(round(float(v))) for f, v in zip(META_FIELDS, meta)}
    return RunConfig(**values)


def validate_checkpoint(tensors: dict, cfg: RunConfig) -> None:
    """Exact name and shape check; raises CheckpointError naming offenders."""
    spec = weight_spec(cfg)
    missing = sorted(set(spec) - set(tensors))
    extra = sorted(set(tensors) - set(spec))
    if missing or extra:
        raise CheckpointError(f"checkpoint names mismatch: missing={missing[:8]} "
                              f"extra={extra[:8]}")
    bad = [f"{n}: {tensors[n].shape} != {spec[n]}" for n in spec
           if tuple(tensors[n].shape) != tuple(spec[n])]
    if bad:
        raise CheckpointError("checkpoint shape mismatch: " + "; ".join(bad[:8]))


def _mlp(tensors: dict, prefix: str) -> MlpWeights:
    return MlpWeights(w1=tensors[f"{prefix}.w1"], b1=tensors[f"{prefix}.b1"],
                      w2=tensors[f"{prefix}.w2"], b2=tensors[f"{prefix}.b2"])


def _block(tensors: dict, prefix: str) -> AttentionBlockWeights:
    attn = AttentionWeights(
        wq=tensors[f"{prefix}.wq"], wk=tensors[f"{prefix}.wk"],
        wv=tensors[f"{prefix}.wv"], wo=tensors[f"{prefix}.wo"],
        bq=tensors[f"{prefix}.bq"], bk=tensors[f"{prefix}.bk"],
        bv=tensors[f"{prefix}.bv"], bo=tensors[f"{prefix}.bo"])
    return AttentionBlockWeights(
        attn=attn,
        ln1_gain=tensors[f"{prefix}.ln1_g"], ln1_bias=tensors[f"{prefix}.ln1_b"],
        ffn=_mlp(tensors, f"{prefix}.ffn"),
        ln2_gain=tensors[f"{prefix}.ln2_g"], ln2_bias=tensors[f"{prefix}.ln2_b"])


def load_model(tensors: dict, cfg: RunConfig | None = None) -> ModelWeights:
    """Typed view over a raw tensor map, validated against the config.

    With cfg=None the dims come from the checkpoint's own meta tensor.
    """
    if cfg is None:
        cfg = meta_to_config(tensors)
    else:
        stored = meta_to_config(tensors)
        mismatches = [f"{f}: config {getattr(cfg, f)} != checkpoint {getattr(stored, f)}"
                      for f in META_FIELDS if getattr(cfg, f) != getattr(stored, f)]
        if mismatches:
            raise CheckpointError("config/checkpoint mismatch: "
                                  + "; ".join(mismatches))
    validate_checkpoint(tensors, cfg)
    token = TokenWeights(joint_proj_w=tensors["token.joint_proj.w"],
                         joint_proj_b=tensors["token.joint_proj.b"],
                         mlp_obj=_mlp(tensors, "token.mlp_o"),
                         mlp_joint=_mlp(tensors, "token.mlp_j"),
                         mlp_global=_mlp(tensors, "token.mlp_g"))
    return ModelWeights(
        embed_human=_mlp(tensors, "encoder.embed_h"),
        embed_object=_mlp(tensors, "encoder.embed_o"),
        pose_init=_mlp(tensors, "encoder.pose_init"),
        scat=ScatWeights(refine=_block(tensors, "scat.refine"),
                         inject=_block(tensors, "scat.inject")),
        token=token,
        tiat_layers=[_block(tensors, f"tiat.layer{i:02d}")
                     for i in range(cfg.tiat_layers)],
        heads=HeadWeights(human=_mlp(tensors, "head.human"),
                          object=_mlp(tensors, "head.object")),
        meta={f: getattr(cfg, f) for f in META_FIELDS})
