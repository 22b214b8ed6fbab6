"""End-to-end inference over an in-memory scene."""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from hoirecon.bodymodel import default_skeleton
from hoirecon.bundles import SceneBundle
from hoirecon.config import RunConfig
from hoirecon.pipeline import run_inference
from hoirecon.synth import (SceneScript, affine_feature_map,
                            frame_feature_seed, generate_scene,
                            synthetic_motion_prior)
from hoirecon.weights import load_model, random_checkpoint

CFG = RunConfig(crop_size=32, feat_channels=8, model_dim=32, num_heads=4,
                ffn_dim=64, tiat_layers=2, window=4)
STAGES = {"dataprep", "encode", "scat", "tokenize", "tiat", "heads", "decode"}


def build_scene(frames=6, seed=0):
    script = SceneScript(
        seed=seed, frames=frames, fps=30.0,
        camera={"fx": 125.0, "fy": 125.0, "cx": 80.0, "cy": 60.0,
                "width": 160, "height": 120},
        feature_grid=8, feature_channels=CFG.feat_channels)
    skel = default_skeleton()
    gt, (hmasks, omasks), (tverts, tfaces) = generate_scene(script, skel)
    pverts, pjoints = synthetic_motion_prior(
        gt, script.prior_sigma_rot, script.prior_sigma_trans, script.seed)
    g = script.feature_grid
    feats = np.stack([
        affine_feature_map(g, g, CFG.feat_channels, frame_feature_seed(seed, t))
        for t in range(frames)])
    scene = SceneBundle(
        camera=script.cam(), fps=script.fps, frames=frames,
        human_masks=hmasks, object_masks=omasks, features=feats,
        pelvis=gt.pelvis, prior_verts=pverts, prior_joints=pjoints,
        template_verts=tverts, template_faces=tfaces, skeleton=skel,
        path=Path("<memory>"))
    return scene, gt


def test_inference_output_layout():
    scene, _ = build_scene()
    model = load_model(random_checkpoint(CFG, seed=1))
    result = run_inference(scene, model, CFG)
    n = scene.frames
    assert len(result.pred) == n
    assert result.pred.fps == scene.fps
    assert result.pred.human_verts.shape == (n, 430, 3)
    assert result.pred.joints.shape == (n, 24, 3)
    assert result.pred.obj_verts.shape == (n, len(scene.template_verts), 3)
    # one contact weight per human prior vertex, normalized per frame
    assert result.heatmaps.shape == (n, scene.prior_verts.shape[1])
    assert np.abs(result.heatmaps.sum(axis=1) - 1.0).max() < 1e-5
    assert set(result.stage_times) == STAGES
    assert all(v >= 0.0 for v in result.stage_times.values())
    # regressed rotations decode to proper rotations
    det = np.linalg.det(result.pred.obj_rot)
    assert np.abs(det - 1.0).max() < 1e-5


def test_inference_deterministic():
    scene, _ = build_scene(seed=3)
    model = load_model(random_checkpoint(CFG, seed=2))
    a = run_inference(scene, model, CFG)
    b = run_inference(scene, model, CFG)
    for name in ("root6d", "theta", "beta", "trans", "obj_rot", "obj_trans",
                 "human_verts", "obj_verts", "joints"):
        assert np.array_equal(getattr(a.pred, name), getattr(b.pred, name))
    assert np.array_equal(a.heatmaps, b.heatmaps)


def test_window_override_changes_output():
    scene, _ = build_scene(seed=4)
    model = load_model(random_checkpoint(CFG, seed=5))
    wide = run_inference(scene, model, CFG)
    narrow = run_inference(scene, model, CFG, window=1)
    same = run_inference(scene, model, CFG, window=CFG.window)
    assert np.array_equal(wide.pred.trans, same.pred.trans)
    assert np.abs(wide.pred.trans - narrow.pred.trans).max() > 0.0


def test_dimension_checks():
    scene, _ = build_scene(seed=6)
    model = load_model(random_checkpoint(CFG, seed=7))
    with pytest.raises(ValueError, match="checkpoint expects"):
        big = load_model(random_checkpoint(replace(CFG, feat_channels=16), seed=7))
        run_inference(scene, big, replace(CFG, feat_channels=16))
    with pytest.raises(ValueError, match="not a multiple"):
        run_inference(scene, model, replace(CFG, crop_size=36))
    short = replace(scene, features=scene.features[:-1])
    with pytest.raises(ValueError, match="feature maps for"):
        run_inference(short, model, CFG)
    rect = replace(scene, features=scene.features[:, :4])
    with pytest.raises(ValueError, match="square"):
        run_inference(rect, model, CFG)
