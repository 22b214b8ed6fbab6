"""Command-line entry points.

    hoirecon synth    --out scene/ [--script script.json] [--seed N] [--frames N]
    hoirecon init     --out model.thow [--config run.cfg] [--seed N]
    hoirecon infer    --scene scene/ --checkpoint model.thow --out pred/
                      [--config run.cfg] [--window N] [--frames N]
    hoirecon eval     --pred pred/ --gt scene/gt [--out report.json]
    hoirecon fit      --template mesh.obj --target target.json --out pose.json
                      [--steps N] [--lr X] [--curve curve.csv]
    hoirecon selftest [--checkpoint model.thow]

Timing goes to stderr; results go to stdout / the requested output paths.
"""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fileio
from .bodymodel import default_skeleton
from .bundles import (load_scene_bundle, load_sequence_bundle,
                      save_scene_bundle, save_sequence_bundle)
from .config import ConfigError, RunConfig, load_config
from .losses import FitDivergence, fit_object_pose
from .metrics import evaluate_sequence
from .pipeline import run_inference
from .synth import (SceneScript, affine_feature_map, frame_feature_seed,
                    generate_scene, synthetic_motion_prior)
from .weights import (CheckpointError, load_model, meta_to_config,
                      random_checkpoint, validate_checkpoint)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    t0 = time.perf_counter()
    if args.script is not None:
        script = SceneScript.from_dict(fileio.load_json(args.script))
    else:
        script = SceneScript()
    if args.seed is not None:
        script = replace(script, seed=args.seed)
    if args.frames is not None:
        script = replace(script, frames=args.frames)
    skel = default_skeleton()
    gt, (hmasks, omasks), (tverts, tfaces) = generate_scene(script, skel)
    prior_verts, prior_joints = synthetic_motion_prior(
        gt, script.prior_sigma_rot, script.prior_sigma_trans, script.seed)
    g, c = script.feature_grid, script.feature_channels
    features = np.stack([
        affine_feature_map(g, g, c, frame_feature_seed(script.seed, t))
        for t in range(script.frames)])
    save_scene_bundle(args.out, script.cam(), script.fps, skel, tverts, tfaces,
                      hmasks, omasks, features, gt.pelvis,
                      prior_verts, prior_joints, gt=gt)
    _log(f"[synth] {script.frames} frames -> {args.out} "
         f"({time.perf_counter() - t0:.2f}s)")
    return 0


def cmd_init(args) -> int:
    cfg = load_config(args.config, overrides={"seed": args.seed})
    tensors = random_checkpoint(cfg)
    fileio.save_checkpoint(args.out, tensors)
    _log(f"[init] {len(tensors)} tensors -> {args.out} (seed {cfg.seed})")
    return 0


def cmd_infer(args) -> int:
    tensors = fileio.load_checkpoint(args.checkpoint)
    if args.config is not None:
        cfg = load_config(args.config)
        model = load_model(tensors, cfg)
    else:
        cfg = meta_to_config(tensors)
        model = load_model(tensors)
    scene = load_scene_bundle(args.scene, max_frames=args.frames)
    result = run_inference(scene, model, cfg, window=args.window)
    out = Path(args.out)
    save_sequence_bundle(out, result.pred)
    fileio.save_tensor(out / "heatmaps.thof", result.heatmaps)
    fileio.save_json(out / "timing.json", result.stage_times)
    for stage, dt in result.stage_times.items():
        _log(f"[infer] {stage:9s} {dt * 1000.0:8.1f} ms")
    _log(f"[infer] {scene.frames} frames -> {out}")
    return 0


def cmd_eval(args) -> int:
    pred = load_sequence_bundle(args.pred)
    gt = load_sequence_bundle(args.gt)
    report = evaluate_sequence(pred, gt)
    print(f"frames       {report.frames}")
    print(f"CD human     {report.cd_human:.4f} cm")
    print(f"CD object    {report.cd_object:.4f} cm")
    print(f"CD combined  {report.cd_combined:.4f} cm")
    print(f"V2V object   {report.v2v_object:.4f} cm")
    print(f"Acc human    {report.acc_human:.4f} cm/s^2")
    print(f"Acc object   {report.acc_object:.4f} cm/s^2")
    if args.out is not None:
        fileio.save_json(args.out, report.to_dict())
    return 0


def _write_curve(path, curve) -> None:
    with open(path, "w") as f:
        f.write("step,loss\n")
        for i, v in enumerate(curve):
            f.write(f"{i},{v:.12e}\n")


def cmd_fit(args) -> int:
    tverts, _ = fileio.load_obj(args.template)
    target = fileio.load_json(args.target)
    if "vertices" not in target:
        raise ValueError(f"{args.target}: target JSON needs a 'vertices' array")
    tgt = np.asarray(target["vertices"], dtype=np.float64)
    try:
        pose, curve = fit_object_pose(
            tverts, tgt,
            init_r6d=target.get("init_rot6d"),
            init_trans=target.get("init_trans"),
            steps=args.steps, lr=args.lr)
    except FitDivergence as e:
        if args.curve is not None:
            _write_curve(args.curve, e.curve)
        _log(f"[fit] diverged: {e}")
        return 1
    fileio.save_json(args.out, {**pose.to_dict(),
                                "final_loss": float(curve[-1]),
                                "steps": len(curve) - 1,
                                "curve": [float(v) for v in curve]})
    if args.curve is not None:
        _write_curve(args.curve, curve)
    print(f"final loss {curve[-1]:.6e} after {len(curve) - 1} steps")
    return 0


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def _small_config() -> RunConfig:
    return RunConfig(crop_size=32, feat_channels=8, model_dim=32, num_heads=4,
                     ffn_dim=64, tiat_layers=2, window=8)


def _check_kernels():
    from . import kernels
    rng = np.random.default_rng(11)
    grid = rng.normal(size=(6, 7, 5)).astype(np.float32)
    us = rng.uniform(-1, 8, size=40)
    vs = rng.uniform(-1, 7, size=40)
    a = kernels.bilinear_many(grid, us, vs)
    b = kernels._bilinear_many_numpy(grid, us, vs)
    if not np.array_equal(a, b):
        raise AssertionError("bilinear backends disagree")
    ref = rng.normal(size=(120, 3))
    q = rng.normal(size=(30, 3))
    d2 = kernels.nearest_sqdist(q, ref)
    full = ((q[:, None, :] - ref[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    if not np.allclose(d2, full, rtol=0, atol=1e-12):
        raise AssertionError("nearest neighbor disagrees with brute force")


def _check_rotations():
    from .geometry import matrix_to_rot6d, rot6d_to_matrix
    rng = np.random.default_rng(5)
    for _ in range(20):
        m = np.linalg.qr(rng.normal(size=(3, 3)))[0]
        if np.linalg.det(m) < 0:
            m[:, 2] *= -1
        back = rot6d_to_matrix(matrix_to_rot6d(m))
        if np.abs(back - m).max() > 1e-9:
            raise AssertionError("6D round trip error above 1e-9")


def _check_umeyama():
    from .geometry import umeyama_align
    rng = np.random.default_rng(6)
    src = rng.normal(size=(50, 3))
    rot = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    if np.linalg.det(rot) < 0:
        rot[:, 2] *= -1
    t = np.array([0.3, -0.2, 1.1])
    pose = umeyama_align(src, src @ rot.T + t)
    if (np.abs(pose.rotation - rot).max() > 1e-9
            or np.abs(pose.translation - t).max() > 1e-9):
        raise AssertionError("rigid alignment failed to recover the transform")


def _check_rope():
    from .tiat import rope_rotate
    rng = np.random.default_rng(7)
    q = rng.normal(size=16).astype(np.float32)
    k = rng.normal(size=16).astype(np.float32)
    a = float(rope_rotate(q, 3.0) @ rope_rotate(k, 9.0))
    b = float(rope_rotate(q, 10.0) @ rope_rotate(k, 16.0))
    if abs(a - b) > 1e-4:
        raise AssertionError(f"rotary logits not shift invariant: {a} vs {b}")


def _check_mask():
    from .tiat import local_mask
    m = local_mask(16, 4)
    if m[0, 3] != 0.0 or not np.isneginf(m[0, 4]) or m[5, 5] != 0.0:
        raise AssertionError("local window mask has wrong entries")


def _check_zero_global():
    from .tiat import GlobalContext, tokenize_frame
    from .weights import load_model
    cfg = _small_config()
    model = load_model(random_checkpoint(cfg, seed=3))
    rng = np.random.default_rng(8)
    f_obj = rng.normal(size=(10, cfg.model_dim)).astype(np.float32)
    from .encoder import VertexFeatures
    joints = VertexFeatures(
        data=rng.normal(size=(24, cfg.feat_channels + 3)).astype(np.float32),
        behind=np.zeros(24, bool))
    base = GlobalContext(np.zeros(2), 1.0, np.zeros(3))
    moved = GlobalContext(np.ones(2) * 10, 11.0, np.ones(3) * -10)
    a = tokenize_frame(f_obj, joints, base, model.token)
    b = tokenize_frame(f_obj, joints, moved, model.token)
    if not np.array_equal(a, b):
        raise AssertionError("fresh tokenizer is not invariant to the context")


def cmd_selftest(args) -> int:
    suites = [
        ("kernels", _check_kernels),
        ("rotation-6d", _check_rotations),
        ("rigid-align", _check_umeyama),
        ("rope-shift", _check_rope),
        ("window-mask", _check_mask),
        ("zero-global-token", _check_zero_global),
    ]

    def _checkpoint():
        if args.checkpoint is not None:
            tensors = fileio.load_checkpoint(args.checkpoint)
            validate_checkpoint(tensors, meta_to_config(tensors))
            load_model(tensors)
        else:
            cfg = _small_config()
            validate_checkpoint(random_checkpoint(cfg), cfg)

    suites.append(("checkpoint", _checkpoint))
    failed = 0
    for name, fn in suites:
        try:
            fn()
            print(f"ok   {name}")
        except Exception as e:  # report every suite, then fail once
            failed += 1
            print(f"FAIL {name}: {e}")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hoirecon",
                                description="feed-forward 4D human-object "
                                            "interaction reconstruction")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic scene bundle")
    s.add_argument("--out", required=True)
    s.add_argument("--script", help="scene script JSON")
    s.add_argument("--seed", type=int)
    s.add_argument("--frames", type=int)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("init", help="write a fresh random checkpoint")
    s.add_argument("--out", required=True)
    s.add_argument("--config", help="key=value config file")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_init)

    s = sub.add_parser("infer", help="reconstruct a scene bundle")
    s.add_argument("--scene", required=True)
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--config", help="must match the checkpoint dims")
    s.add_argument("--window", type=int, help="override the temporal window")
    s.add_argument("--frames", type=int, help="use only the first N frames")
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("eval", help="compare a prediction bundle to ground truth")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--out", help="write the report as JSON")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("fit", help="fit a rigid pose to corresponded points")
    s.add_argument("--template", required=True, help="OBJ mesh")
    s.add_argument("--target", required=True,
                   help="JSON with 'vertices' (+ optional init_rot6d/init_trans)")
    s.add_argument("--out", required=True)
    s.add_argument("--steps", type=int, default=500)
    s.add_argument("--lr", type=float, default=0.1)
    s.add_argument("--curve", help="also write the loss curve as CSV")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("selftest", help="run fast invariant checks")
    s.add_argument("--checkpoint", help="validate this checkpoint too")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CheckpointError, fileio.FormatError,
            FileNotFoundError, NotADirectoryError, ValueError) as e:
        _log(f"error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
