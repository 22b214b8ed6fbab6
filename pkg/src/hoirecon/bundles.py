"""On-disk layouts: scene bundles and sequence (prediction / GT) bundles.

A scene bundle is what `synth` writes and `infer` consumes::

    scene.json                 frames, fps, feature grid/channels
    camera.json
    skeleton.json, rest_mesh.obj
    template.obj
    pelvis.jsonl               {"frame": i, "pelvis": [x, y, z]}
    masks/human_%04d.pgm, masks/object_%04d.pgm
    features/frame_%04d.thof   (h, w, C) float32
    prior/human_verts.thof, prior/human_joints.thof
    gt/                        a sequence bundle (below)

A sequence bundle holds one HoiSequence::

    meta.json                  frames, fps
    human_params.jsonl         {"frame", "root6d", "theta", "beta", "trans"}
    object_poses.jsonl         {"frame", "R" (9, row-major), "T"}
    human_verts.thof, object_verts.thof, joints.thof
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fileio
from .bodymodel import HumanParams, ToySkeleton, load_skeleton, save_skeleton
from .geometry import Camera, RigidPose
from .sequence import HoiSequence


# ---------------------------------------------------------------------------
# sequence bundles
# ---------------------------------------------------------------------------

def save_sequence_bundle(out_dir, seq: HoiSequence) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fileio.save_json(out / "meta.json", {"frames": len(seq), "fps": seq.fps})
    rows = []
    for t in range(len(seq)):
        row = {"frame": t}
        row.update(seq.human_params(t).to_dict())
        rows.append(row)
    fileio.save_jsonl(out / "human_params.jsonl", rows)
    fileio.save_jsonl(out / "object_poses.jsonl",
                      [{"frame": t, **seq.object_pose(t).to_dict()}
                       for t in range(len(seq))])
    fileio.save_tensor(out / "human_verts.thof", seq.human_verts)
    fileio.save_tensor(out / "object_verts.thof", seq.obj_verts)
    fileio.save_tensor(out / "joints.thof", seq.joints)


def load_sequence_bundle(in_dir) -> HoiSequence:
    src = Path(in_dir)
    meta = fileio.load_json(src / "meta.json")
    params = [HumanParams.from_dict(r)
              for r in fileio.load_jsonl(src / "human_params.jsonl")]
    poses = [RigidPose.from_dict(r)
             for r in fileio.load_jsonl(src / "object_poses.jsonl")]
    hv = fileio.load_tensor(src / "human_verts.thof").astype(np.float64)
    ov = fileio.load_tensor(src / "object_verts.thof").astype(np.float64)
    js = fileio.load_tensor(src / "joints.thof").astype(np.float64)
    n = int(meta["frames"])
    if not (len(params) == len(poses) == hv.shape[0] == ov.shape[0]
            == js.shape[0] == n):
        raise ValueError(f"{in_dir}: bundle frame counts disagree with meta ({n})")
    return HoiSequence(
        root6d=np.stack([p.root6d for p in params]),
        theta=np.stack([p.theta for p in params]),
        beta=np.stack([p.beta for p in params]),
        trans=np.stack([p.trans for p in params]),
        obj_rot=np.stack([p.rotation for p in poses]),
        obj_trans=np.stack([p.translation for p in poses]),
        human_verts=hv, obj_verts=ov, joints=js, fps=float(meta["fps"]))


# ---------------------------------------------------------------------------
# scene bundles
# ---------------------------------------------------------------------------

@dataclass
class SceneBundle:
    """A scene bundle loaded into memory."""

    camera: Camera
    fps: float
    frames: int
    human_masks: np.ndarray    # (N, H, W) uint8
    object_masks: np.ndarray
    features: np.ndarray       # (N, h, w, C) float32
    pelvis: np.ndarray         # (N, 3)
    prior_verts: np.ndarray    # (N, Vh, 3)
    prior_joints: np.ndarray   # (N, J, 3)
    template_verts: np.ndarray
    template_faces: np.ndarray | None
    skeleton: ToySkeleton
    path: Path


def save_scene_bundle(out_dir, camera: Camera, fps: float, skel: ToySkeleton,
                      template_verts, template_faces, human_masks, object_masks,
                      features, pelvis, prior_verts, prior_joints,
                      gt: HoiSequence | None = None) -> None:
    out = Path(out_dir)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    (out / "features").mkdir(exist_ok=True)
    (out / "prior").mkdir(exist_ok=True)
    n = len(human_masks)
    features = np.asarray(features, dtype=np.float32)
    fileio.save_json(out / "scene.json", {
        "frames": n, "fps": fps,
        "feature_grid": [int(features.shape[1]), int(features.shape[2])],
        "feature_channels": int(features.shape[3])})
    fileio.save_json(out / "camera.json", camera.to_dict())
    save_skeleton(out / "skeleton.json", out / "rest_mesh.obj", skel)
    fileio.save_obj(out / "template.obj", template_verts, template_faces)
    for t in range(n):
        fileio.save_pgm(out / "masks" / f"human_{t:04d}.pgm", human_masks[t])
        fileio.save_pgm(out / "masks" / f"object_{t:04d}.pgm", object_masks[t])
        fileio.save_tensor(out / "features" / f"frame_{t:04d}.thof", features[t])
    fileio.save_jsonl(out / "pelvis.jsonl",
                      [{"frame": t, "pelvis": [float(x) for x in pelvis[t]]}
                       for t in range(n)])
    fileio.save_tensor(out / "prior" / "human_verts.thof", prior_verts)
    fileio.save_tensor(out / "prior" / "human_joints.thof", prior_joints)
    if gt is not None:
        save_sequence_bundle(out / "gt", gt)


def load_scene_bundle(in_dir, max_frames: int | None = None) -> SceneBundle:
    src = Path(in_dir)
    if not (src / "scene.json").exists():
        raise FileNotFoundError(f"{src}: not a scene bundle (no scene.json)")
    meta = fileio.load_json(src / "scene.json")
    n = int(meta["frames"])
    if max_frames is not None:
        if max_frames < 1:
            raise ValueError(f"--frames must be >= 1, got {max_frames}")
        n = min(n, max_frames)
    camera = Camera.from_dict(fileio.load_json(src / "camera.json"))
    skel = load_skeleton(src / "skeleton.json", src / "rest_mesh.obj")
    tverts, tfaces = fileio.load_obj(src / "template.obj")
    hmasks = []
    omasks = []
    feats = []
    for t in range(n):
        hmasks.append(fileio.load_pgm(src / "masks" / f"human_{t:04d}.pgm"))
        omasks.append(fileio.load_pgm(src / "masks" / f"object_{t:04d}.pgm"))
        feats.append(fileio.load_tensor(src / "features" / f"frame_{t:04d}.thof"))
    pelvis_rows = fileio.load_jsonl(src / "pelvis.jsonl")[:n]
    pelvis = np.asarray([r["pelvis"] for r in sorted(pelvis_rows,
                                                     key=lambda r: r["frame"])])
    prior_verts = fileio.load_tensor(src / "prior" / "human_verts.thof")
    prior_joints = fileio.load_tensor(src / "prior" / "human_joints.thof")
    return SceneBundle(
        camera=camera, fps=float(meta["fps"]), frames=n,
        human_masks=np.stack(hmasks), object_masks=np.stack(omasks),
        features=np.stack(feats).astype(np.float32),
        pelvis=pelvis.astype(np.float64),
        prior_verts=prior_verts.astype(np.float64)[:n],
        prior_joints=prior_joints.astype(np.float64)[:n],
        template_verts=tverts, template_faces=tfaces,
        skeleton=skel, path=src)
