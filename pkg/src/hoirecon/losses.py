"""Training losses and the analytic-gradient object pose fitter.

Every term is an L1 norm summed over the components of one entity (a 3- or
6- or 10-vector), averaged over entities and frames, so values are
length-invariant. Temporal terms use forward differences times fps for
velocity and central second differences times fps^2 for acceleration.
All math here is float64.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import RigidPose, matrix_to_rot6d, rot6d_to_matrix
from .sequence import HoiSequence


@dataclass(frozen=True)
class LossWeights:
    """Per-term weights; defaults follow the reference configuration."""

    rot_h: float = 0.2
    shape_h: float = 0.2
    trans_h: float = 1.0
    rot_o: float = 0.2
    trans_o: float = 1.0

    verts_h: float = 1.0
    verts_o: float = 1.0
    joints: float = 1.0
    edge: float = 1.0
    rel_dist: float = 1.0

    vel_h: float = 0.5
    acc_h: float = 0.1
    reg_h: float = 1.0
    vel_o: float = 0.5
    acc_o: float = 0.1
    reg_o: float = 0.5


def _l1(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean over leading axes of the per-entity component-sum |pred - gt|."""
    d = np.abs(np.asarray(pred, np.float64) - np.asarray(gt, np.float64))
    return float(d.sum(axis=-1).mean())


def _norm1(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.abs(x).sum(axis=-1).mean())


def _check_frames(pred: HoiSequence, gt: HoiSequence, minimum: int = 1) -> int:
    if len(pred) != len(gt):
        raise ValueError(f"sequences differ in length: {len(pred)} vs {len(gt)}")
    if len(pred) < minimum:
        raise ValueError(f"need at least {minimum} frames, got {len(pred)}")
    return len(pred)


def param_loss(pred: HoiSequence, gt: HoiSequence,
               w: LossWeights = LossWeights()) -> dict:
    """L1 on parameters: 6D rotations, shape, translations (both entities).

    Human rotations average the root and the per-joint rotations together;
    object rotations compare the first two matrix columns (the 6D form).
    """
    _check_frames(pred, gt)
    rot_pred = np.concatenate([pred.root6d[:, None, :], pred.theta], axis=1)
    rot_gt = np.concatenate([gt.root6d[:, None, :], gt.theta], axis=1)
    obj6_pred = np.stack([matrix_to_rot6d(r) for r in pred.obj_rot])
    obj6_gt = np.stack([matrix_to_rot6d(r) for r in gt.obj_rot])
    terms = {
        "param.rot_h": w.rot_h * _l1(rot_pred, rot_gt),
        "param.shape_h": w.shape_h * _l1(pred.beta, gt.beta),
        "param.trans_h": w.trans_h * _l1(pred.trans, gt.trans),
        "param.rot_o": w.rot_o * _l1(obj6_pred, obj6_gt),
        "param.trans_o": w.trans_o * _l1(pred.obj_trans, gt.obj_trans),
    }
    return terms


def mesh_loss(pred: HoiSequence, gt: HoiSequence, edges: np.ndarray,
              w: LossWeights = LossWeights()) -> dict:
    """L1 on decoded geometry: vertices, joints, edge lengths and the
    pelvis-to-object relative vector."""
    _check_frames(pred, gt)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)

    def edge_lengths(verts):
        d = verts[:, edges[:, 0]] - verts[:, edges[:, 1]]
        return np.linalg.norm(d, axis=-1)

    rel_pred = pred.pelvis - pred.obj_trans
    rel_gt = gt.pelvis - gt.obj_trans
    terms = {
        "mesh.verts_h": w.verts_h * _l1(pred.human_verts, gt.human_verts),
        "mesh.verts_o": w.verts_o * _l1(pred.obj_verts, gt.obj_verts),
        "mesh.joints": w.joints * _l1(pred.joints, gt.joints),
        "mesh.edge": w.edge * float(np.abs(edge_lengths(pred.human_verts)
                                           - edge_lengths(gt.human_verts)).mean()),
        "mesh.rel_dist": w.rel_dist * _l1(rel_pred, rel_gt),
    }
    return terms


def _velocity(x: np.ndarray, fps: float) -> np.ndarray:
    return (x[1:] - x[:-1]) * fps


def _acceleration(x: np.ndarray, fps: float) -> np.ndarray:
    return (x[2:] - 2.0 * x[1:-1] + x[:-2]) * fps * fps


def acc_loss(pred: HoiSequence, gt: HoiSequence,
             w: LossWeights = LossWeights()) -> dict:
    """Temporal smoothness: velocity and acceleration L1 plus an
    acceleration regularizer on the prediction, per entity."""
    _check_frames(pred, gt, minimum=3)
    fps = pred.fps
    terms = {}
    for tag, vp, vg, lv, la, lr in (
            ("h", pred.human_verts, gt.human_verts, w.vel_h, w.acc_h, w.reg_h),
            ("o", pred.obj_verts, gt.obj_verts, w.vel_o, w.acc_o, w.reg_o)):
        ap = _acceleration(vp, fps)
        terms[f"acc.vel_{tag}"] = lv * _l1(_velocity(vp, fps), _velocity(vg, fps))
        terms[f"acc.acc_{tag}"] = la * _l1(ap, _acceleration(vg, fps))
        terms[f"acc.reg_{tag}"] = lr * _norm1(ap)
    return terms


def total_loss(pred: HoiSequence, gt: HoiSequence, edges: np.ndarray,
               w: LossWeights = LossWeights()):
    """Sum of all loss families; returns (total, per-term breakdown)."""
    terms = {}
    terms.update(param_loss(pred, gt, w))
    terms.update(mesh_loss(pred, gt, edges, w))
    terms.update(acc_loss(pred, gt, w))
    return float(sum(terms.values())), terms


# ---------------------------------------------------------------------------
# direct object-pose fitting
# ---------------------------------------------------------------------------

class FitDivergence(RuntimeError):
    """Gradient descent diverged; carries the loss curve for inspection."""

    def __init__(self, message: str, curve):
        super().__init__(message)
        self.curve = np.asarray(curve)


def pose_fit_loss_grad(r6d: np.ndarray, trans: np.ndarray, template: np.ndarray,
                       target: np.ndarray):
    """Mean squared vertex error and its analytic gradients.

    The rotation gradient is backpropagated through the Gram-Schmidt
    orthonormalization, so it lives in the raw 6D coordinates.
    Returns (loss, grad_r6d (6,), grad_trans (3,)).
    """
    r = np.asarray(r6d, dtype=np.float64).reshape(6)
    t = np.asarray(trans, dtype=np.float64).reshape(3)
    p = np.asarray(template, dtype=np.float64).reshape(-1, 3)
    q = np.asarray(target, dtype=np.float64).reshape(-1, 3)
    if p.shape != q.shape:
        raise ValueError(f"template/target shapes differ: {p.shape} vs {q.shape}")
    n = len(p)

    a, b = r[:3], r[3:]
    na = np.linalg.norm(a)
    if na < 1e-8:
        raise ValueError(f"degenerate 6D input (|a| = {na:.3e})")
    c1 = a / na
    d = c1 @ b
    u = b - d * c1
    nu = np.linalg.norm(u)
    if nu < 1e-8:
        raise ValueError(f"degenerate 6D input (columns collinear, |u| = {nu:.3e})")
    c2 = u / nu
    c3 = np.cross(c1, c2)
    rot = np.stack([c1, c2, c3], axis=1)

    resid = p @ rot.T + t - q
    loss = float((resid ** 2).sum() / n)

    big_g = 2.0 * resid.T @ p / n           # dL/dR, (3, 3)
    grad_t = 2.0 * resid.sum(axis=0) / n
    g1, g2, g3 = big_g[:, 0], big_g[:, 1], big_g[:, 2]
    # c3 = c1 x c2
    g1 = g1 + np.cross(c2, g3)
    g2 = g2 + np.cross(g3, c1)
    # c2 = u / |u|
    gu = (g2 - (c2 @ g2) * c2) / nu
    # u = b - (c1 . b) c1
    gb = gu - (c1 @ gu) * c1
    g1 = g1 - (c1 @ gu) * b - d * gu
    # c1 = a / |a|
    ga = (g1 - (c1 @ g1) * c1) / na
    return loss, np.concatenate([ga, gb]), grad_t


def fit_object_pose(template: np.ndarray, target: np.ndarray,
                    init_r6d=None, init_trans=None, steps: int = 500,
                    lr: float = 0.1, tol: float = 1e-14):
    """Fit a rigid pose to corresponded points by gradient descent.

    Minimizes the mean squared vertex error over the 6D rotation and the
    translation with analytic gradients. Returns (RigidPose, loss curve);
    the curve includes the initial loss. Stops early below ``tol``; raises
    FitDivergence when the loss exceeds 10x its initial value.
    """
    r = (np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]) if init_r6d is None
         else np.asarray(init_r6d, dtype=np.float64).reshape(6).copy())
    t = (np.zeros(3) if init_trans is None
         else np.asarray(init_trans, dtype=np.float64).reshape(3).copy())
    curve = []
    loss, gr, gt = pose_fit_loss_grad(r, t, template, target)
    curve.append(loss)
    for _ in range(steps):
        if loss <= tol:
            break
        r = r - lr * gr
        t = t - lr * gt
        loss, gr, gt = pose_fit_loss_grad(r, t, template, target)
        curve.append(loss)
        if loss > 10.0 * max(curve[0], tol):
            raise FitDivergence(
                f"pose fit diverged: loss {loss:.3e} vs initial {curve[0]:.3e}",
                curve)
    return RigidPose(rotation=rot6d_to_matrix(r), translation=t), np.asarray(curve)
