"""End-to-end feed-forward reconstruction over a scene bundle.

Stages, each timed: crop the masks around the projected pelvis, lift
per-vertex features from the crop, refine object features against the human
prior (producing contact heatmaps), fuse each frame into a motion token,
run the temporal stack, regress parameters, and decode meshes.
"""

import time
from dataclasses import dataclass

import numpy as np

from .bodymodel import forward_kinematics
from .bundles import SceneBundle
from .config import RunConfig, with_updates
from .dataprep import FrameSequence, make_crop_sequence
from .encoder import (FeatureMap, compose_to_world, embed_vertices,
                      fps_subsample, human_frame, init_object_pose,
                      masked_avg_pool, sample_vertex_features)
from .geometry import apply_rigid
from .scat import contact_heatmap, contact_inject, internal_refine
from .sequence import HoiSequence, stack_sequence
from .tiat import GlobalContext, regress_parameters, tiat_forward, tokenize_frame
from .weights import ModelWeights


@dataclass
class InferenceResult:
    pred: HoiSequence
    heatmaps: np.ndarray       # (N, V_human) float32, each row sums to 1
    stage_times: dict          # stage name -> seconds


def _check_dims(scene: SceneBundle, model: ModelWeights, cfg: RunConfig) -> float:
    """Validate scene/checkpoint/config agreement; returns the feature stride."""
    n, h, w, c = scene.features.shape
    if h != w:
        raise ValueError(f"feature grid must be square, got {h}x{w}")
    if c != model.meta["feat_channels"]:
        raise ValueError(f"scene features have {c} channels, checkpoint expects "
                         f"feat_channels={model.meta['feat_channels']}")
    if cfg.feat_channels != c:
        raise ValueError(f"config feat_channels={cfg.feat_channels} does not match "
                         f"scene features ({c} channels)")
    if cfg.crop_size % h != 0:
        raise ValueError(f"crop_size {cfg.crop_size} is not a multiple of the "
                         f"{h}-cell feature grid")
    if n != scene.frames:
        raise ValueError(f"{n} feature maps for {scene.frames} frames")
    return cfg.crop_size / h


def run_inference(scene: SceneBundle, model: ModelWeights, cfg: RunConfig,
                  window: int | None = None) -> InferenceResult:
    """Reconstruct the scene; returns predictions, heatmaps and stage times.

    ``window`` overrides the temporal attention window at run time (the
    checkpoint's other dims are structural and must match).
    """
    cfg = with_updates(cfg, window=window)
    stride = _check_dims(scene, model, cfg)
    times: dict = {}

    t0 = time.perf_counter()
    seq = FrameSequence(scene.human_masks, scene.object_masks, scene.fps)
    crops = make_crop_sequence(seq, scene.camera, scene.pelvis,
                               pad=cfg.pad, target_size=cfg.crop_size)
    times["dataprep"] = time.perf_counter() - t0

    sub = fps_subsample(scene.template_verts)
    template_sub = scene.template_verts[sub]
    acfg = cfg.attention()

    times["encode"] = times["scat"] = times["tokenize"] = 0.0
    tokens = []
    heatmaps = []
    for t in range(scene.frames):
        _, omask_c, spec = crops[t]
        fmap = FeatureMap(scene.features[t], stride=stride)

        t0 = time.perf_counter()
        pooled = masked_avg_pool(fmap, omask_c)
        rel = init_object_pose(pooled, model.pose_init)
        obj_pose = compose_to_world(rel, human_frame(scene.pelvis[t]))
        obj_verts = apply_rigid(obj_pose, template_sub)
        cam = spec.cropped_cam
        raw_h = sample_vertex_features(fmap, cam, scene.prior_verts[t])
        raw_o = sample_vertex_features(fmap, cam, obj_verts)
        raw_j = sample_vertex_features(fmap, cam, scene.prior_joints[t])
        f_human = embed_vertices(raw_h, model.embed_human)
        f_obj = embed_vertices(raw_o, model.embed_object)
        times["encode"] += time.perf_counter() - t0

        t0 = time.perf_counter()
        f_obj = internal_refine(f_obj, model.scat, acfg)
        f_obj, attn = contact_inject(f_obj, f_human, model.scat, acfg)
        heatmaps.append(contact_heatmap(attn))
        times["scat"] += time.perf_counter() - t0

        t0 = time.perf_counter()
        g = GlobalContext(box_center=spec.center, box_side=spec.side,
                          pelvis=scene.pelvis[t])
        tokens.append(tokenize_frame(f_obj, raw_j, g, model.token))
        times["tokenize"] += time.perf_counter() - t0

    t0 = time.perf_counter()
    refined = tiat_forward(np.stack(tokens), cfg.tiat(), model.tiat_layers)
    times["tiat"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    params, poses = regress_parameters(refined, model.heads)
    times["heads"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    joints = []
    human_verts = []
    for p in params:
        j, v = forward_kinematics(scene.skeleton, p)
        joints.append(j)
        human_verts.append(v)
    obj_verts_full = np.stack([apply_rigid(pose, scene.template_verts)
                               for pose in poses])
    pred = stack_sequence(params, poses, np.stack(human_verts), obj_verts_full,
                          np.stack(joints), scene.fps)
    times["decode"] = time.perf_counter() - t0

    return InferenceResult(pred=pred, heatmaps=np.stack(heatmaps),
                           stage_times=times)
